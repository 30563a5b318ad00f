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

#include "splitarch/error.hpp"

namespace splitarch {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::MalformedPacket: return "MalformedPacket";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::ReservedLabel: return "ReservedLabel";
    case ErrorCode::EmptyStack: return "EmptyStack";
    case ErrorCode::NotPppoeData: return "NotPppoeData";
    case ErrorCode::UnknownGroup: return "UnknownGroup";
    case ErrorCode::UnknownPort: return "UnknownPort";
    case ErrorCode::NoLiveBucket: return "NoLiveBucket";
    case ErrorCode::MegMismatch: return "MegMismatch";
    case ErrorCode::ProcessingUnsupported: return "ProcessingUnsupported";
    case ErrorCode::DecapMismatch: return "DecapMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownLink: return "UnknownLink";
    case ErrorCode::NoTraffic: return "NoTraffic";
    case ErrorCode::EmptyView: return "EmptyView";
    case ErrorCode::PermissionDenied: return "PermissionDenied";
    case ErrorCode::NoTransport: return "NoTransport";
    case ErrorCode::UnmappedPort: return "UnmappedPort";
    case ErrorCode::NoDisjointPair: return "NoDisjointPair";
    case ErrorCode::Partition: return "Partition";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::SignalingRejected: return "SignalingRejected";
    case ErrorCode::NoBrasAvailable: return "NoBrasAvailable";
    case ErrorCode::AuthDenied: return "AuthDenied";
    case ErrorCode::UnknownBras: return "UnknownBras";
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::SessionNotOpen: return "SessionNotOpen";
    case ErrorCode::UnknownLogicalPort: return "UnknownLogicalPort";
    case ErrorCode::DanglingLayer: return "DanglingLayer";
    case ErrorCode::NoRoute: return "NoRoute";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, std::string context)
    : std::runtime_error(std::string(to_string(code)) + (context.empty() ? "" : ": " + context))
    , code_(code)
    , context_(std::move(context))
{ }

Error::Error(ErrorCode code, std::string context, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + context + " (" + detail + ")")
    , code_(code)
    , context_(std::move(context))
{ }

} // namespace splitarch
