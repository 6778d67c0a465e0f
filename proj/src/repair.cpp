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

#include <sstream>

#include "lanforge/runtime.hpp"

namespace lanforge {
namespace {

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool kind_matches(FieldKind kind, const Json& v) {
    switch (kind) {
        case FieldKind::string: return v.is_string();
        case FieldKind::boolean: return v.is_boolean();
        case FieldKind::object: return v.is_object();
        case FieldKind::array: return v.is_array();
        case FieldKind::any: return true;
    }
    return false;
}

const char* kind_name(FieldKind kind) {
    switch (kind) {
        case FieldKind::string: return "a string";
        case FieldKind::boolean: return "a boolean";
        case FieldKind::object: return "an object";
        case FieldKind::array: return "an array";
        case FieldKind::any: return "a value";
    }
    return "?";
}

}  // namespace

std::string ResponseTemplate::render() const {
    std::ostringstream out;
    out << "{\n";
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto& f = fields[i];
        if (!f.comment.empty()) {
            std::istringstream lines(f.comment);
            std::string line;
            while (std::getline(lines, line)) out << "  // " << line << "\n";
        }
        out << "  \"" << f.name << "\": " << f.placeholder << (i + 1 < fields.size() ? "," : "") << "\n";
    }
    out << "}\n";
    return out.str();
}

const TemplateField* ResponseTemplate::field(std::string_view name) const {
    for (const auto& f : fields)
        if (f.name == name) return &f;
    return nullptr;
}

std::optional<std::string> ResponseTemplate::violation(const Json& value) const {
    if (!value.is_object()) return "the answer is not a JSON object";
    for (const auto& f : fields) {
        auto it = value.find(f.name);
        if (it == value.end() || it->is_null()) {
            if (f.required) return "missing field \"" + f.name + "\"";
            continue;
        }
        if (!kind_matches(f.kind, *it))
            return "field \"" + f.name + "\" must be " + kind_name(f.kind);
        if (f.check)
            if (auto problem = f.check(*it)) return "field \"" + f.name + "\": " + *problem;
    }
    return std::nullopt;
}

std::optional<Json> parse_strict(std::string_view raw) {
    auto text = trim(raw);
    if (text.starts_with("```")) {
        auto first_nl = text.find('\n');
        if (first_nl == std::string_view::npos || !text.ends_with("```") || text.size() < 6)
            return std::nullopt;
        text = trim(text.substr(first_nl + 1, text.size() - 3 - (first_nl + 1)));
    }
    Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

std::string build_repair_prompt(std::string_view raw, const ResponseTemplate& tmpl,
                                std::string_view problem) {
    std::ostringstream out;
    out << "# Task\n"
        << "The text below was supposed to be a JSON object following the template, but it does "
           "not conform (" << problem << ").\n"
        << "Rewrite it as a single JSON object that follows the template. Keep its content, "
           "output only the JSON object.\n\n"
        << "# Template\n"
        << tmpl.render() << "\n"
        << "# Text\n"
        << raw << "\n";
    return out.str();
}

Json parse_or_reformat(const std::string& raw, const ResponseTemplate& tmpl, Backend& backend,
                       int budget, const RepairContext& context) {
    if (budget < 1) throw ValidationError("repair budget must be at least 1");
    std::vector<std::string> attempts{raw};
    std::string current = raw;
    for (int attempt = 1;; ++attempt) {
        std::string problem = "it is not valid JSON";
        if (auto parsed = parse_strict(current)) {
            auto v = tmpl.violation(*parsed);
            if (!v) return *parsed;
            problem = *v;
        }
        if (attempt >= budget)
            throw FormatError("model output did not match the expected template after " +
                                  std::to_string(attempts.size()) + " attempts: " + problem,
                              attempts);
        CompletionRequest request;
        request.prompt = build_repair_prompt(raw, tmpl, problem);
        request.temperature = context.temperature;
        request.max_tokens = context.max_tokens;
        request.tag = "repair:" + context.tag;
        request.cancel = context.cancel;
        auto response = backend.complete(request);
        if (context.calls)
            context.calls->push_back({request.tag, request.prompt.size(), response.text});
        current = response.text;
        attempts.push_back(current);
    }
}

}  // namespace lanforge
