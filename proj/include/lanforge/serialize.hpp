/*
 * Copyright 2026 The LanForge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "lanforge/lan.hpp"
#include "lanforge/validate.hpp"

namespace lanforge {

using Json = nlohmann::json;

inline constexpr int kLanSchemaVersion = 1;

/// LAN document. Object keys sort lexicographically; `agents` and `edges`
/// keep insertion order.
Json lan_to_json(const Lan& lan);
/// Throws ParseError (with a JSON pointer) or SchemaVersionError.
Lan lan_from_json(const Json& doc);

/// Canonical text: two-space indent, UTF-8, trailing newline.
std::string serialize_lan(const Lan& lan);
/// Throws ParseError (with byte offset for syntax errors) or SchemaVersionError.
Lan deserialize_lan(std::string_view text);

// Building blocks reused by the trace, pipeline, and service documents.
Json to_json(const NamedValues& values);
NamedValues named_values_from_json(const Json& j, const std::string& where);
Json to_json(const Agent& agent);
Agent agent_from_json(const Json& j, const std::string& where);
Json to_json(const KnowledgeItem& item);
KnowledgeItem knowledge_from_json(const Json& j, const std::string& where);
Json to_json(const Violation& violation);

/// Parses text as JSON, mapping syntax errors to ParseError.
Json parse_json(std::string_view text);

}  // namespace lanforge
