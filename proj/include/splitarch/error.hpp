/*
 * Copyright 2026 The splitarch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace splitarch {

enum class ErrorCode {
    // packet model
    MalformedPacket,
    TruncatedFrame,
    ReservedLabel,
    EmptyStack,
    NotPppoeData,
    // data plane
    UnknownGroup,
    UnknownPort,
    NoLiveBucket,
    MegMismatch,
    ProcessingUnsupported,
    DecapMismatch,
    // simulator
    ConfigError,
    UnknownLink,
    NoTraffic,
    // control protocol
    EmptyView,
    PermissionDenied,
    NoTransport,
    UnmappedPort,
    // transport control
    NoDisjointPair,
    Partition,
    Unreachable,
    SignalingRejected,
    // bras
    NoBrasAvailable,
    AuthDenied,
    UnknownBras,
    PoolExhausted,
    SessionNotOpen,
    UnknownLogicalPort,
    DanglingLayer,
    NoRoute,
    // harness
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every recoverable failure in the library is reported as an Error carrying
/// a code and a short context string (a json path for config errors).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string context);
    /// `detail` only feeds the message; `context()` stays machine-comparable.
    Error(ErrorCode code, std::string context, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }
    const std::string& context() const noexcept { return context_; }

private:
    ErrorCode code_;
    std::string context_;
};

} // namespace splitarch
