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

#include "lanforge/serialize.hpp"

#include "lanforge/errors.hpp"

namespace lanforge {
namespace {

const Json& require(const Json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + "/" + key, std::string("missing key \"") + key + "\"");
    return *it;
}

std::string require_string(const Json& obj, const char* key, const std::string& where) {
    const auto& v = require(obj, key, where);
    if (!v.is_string()) throw ParseError(where + "/" + key, "expected a string");
    return v.get<std::string>();
}

std::string optional_string(const Json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) throw ParseError(where + "/" + key, "expected a string");
    return it->get<std::string>();
}

const Json& require_array(const Json& obj, const char* key, const std::string& where) {
    const auto& v = require(obj, key, where);
    if (!v.is_array()) throw ParseError(where + "/" + key, "expected an array");
    return v;
}

const Json* optional_array(const Json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    if (!it->is_array()) throw ParseError(where + "/" + key, "expected an array");
    return &*it;
}

Json examples_to_json(const std::vector<Example>& examples) {
    Json arr = Json::array();
    for (const auto& ex : examples) {
        Json e;
        e["inputs"] = to_json(ex.inputs);
        if (const bool* b = std::get_if<bool>(&ex.result))
            e["result"] = *b;
        else
            e["result"] = std::get<std::string>(ex.result);
        e["provenance"] = ex.provenance;
        arr.push_back(std::move(e));
    }
    return arr;
}

std::vector<Example> examples_from_json(const Json* arr, bool boolean, const std::string& where) {
    std::vector<Example> out;
    if (!arr) return out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const auto at = where + "/" + std::to_string(i);
        const auto& e = (*arr)[i];
        Example ex;
        ex.inputs = named_values_from_json(require(e, "inputs", at), at + "/inputs");
        const auto& r = require(e, "result", at);
        if (boolean) {
            if (!r.is_boolean()) throw ParseError(at + "/result", "expected a boolean");
            ex.result = r.get<bool>();
        } else {
            if (!r.is_string()) throw ParseError(at + "/result", "expected a string");
            ex.result = r.get<std::string>();
        }
        ex.provenance = optional_string(e, "provenance", at);
        out.push_back(std::move(ex));
    }
    return out;
}

Json knowledge_to_json(const std::vector<KnowledgeItem>& items) {
    Json arr = Json::array();
    for (const auto& k : items) arr.push_back(to_json(k));
    return arr;
}

std::vector<KnowledgeItem> knowledge_list_from_json(const Json* arr, const std::string& where) {
    std::vector<KnowledgeItem> out;
    if (!arr) return out;
    for (std::size_t i = 0; i < arr->size(); ++i)
        out.push_back(knowledge_from_json((*arr)[i], where + "/" + std::to_string(i)));
    return out;
}

}  // namespace

Json to_json(const NamedValues& values) {
    Json arr = Json::array();
    for (const auto& [label, value] : values) arr.push_back({{"source", label}, {"value", value}});
    return arr;
}

NamedValues named_values_from_json(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where, "expected an array");
    NamedValues out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto at = where + "/" + std::to_string(i);
        auto label = require_string(j[i], "source", at);
        if (out.contains(label)) throw ParseError(at, "duplicate source label '" + label + "'");
        out.add(std::move(label), require_string(j[i], "value", at));
    }
    return out;
}

Json to_json(const KnowledgeItem& item) {
    return {{"text", item.text}, {"origin", to_string(item.origin)}, {"created_at", item.created_at}};
}

KnowledgeItem knowledge_from_json(const Json& j, const std::string& where) {
    KnowledgeItem k;
    k.text = require_string(j, "text", where);
    auto origin = optional_string(j, "origin", where);
    if (origin.empty() || origin == "user")
        k.origin = Origin::user;
    else if (origin == "pipeline")
        k.origin = Origin::pipeline;
    else
        throw ParseError(where + "/origin", "unknown origin '" + origin + "'");
    k.created_at = optional_string(j, "created_at", where);
    return k;
}

Json to_json(const Agent& agent) {
    Json control;
    control["enabled"] = agent.control.enabled;
    control["required_predecessors"] = agent.control.required_predecessors;
    control["knowledge"] = knowledge_to_json(agent.control.knowledge);
    control["examples"] = examples_to_json(agent.control.examples);
    Json execution;
    execution["subtask_description"] = agent.execution.subtask_description;
    execution["output_description"] = agent.execution.output_description;
    execution["knowledge"] = knowledge_to_json(agent.execution.knowledge);
    execution["examples"] = examples_to_json(agent.execution.examples);
    return {{"name", agent.name}, {"control", std::move(control)}, {"execution", std::move(execution)}};
}

Agent agent_from_json(const Json& j, const std::string& where) {
    Agent a;
    a.name = require_string(j, "name", where);
    if (auto it = j.find("control"); it != j.end() && !it->is_null()) {
        const auto at = where + "/control";
        const auto& c = *it;
        if (!c.is_object()) throw ParseError(at, "expected an object");
        if (auto en = c.find("enabled"); en != c.end()) {
            if (!en->is_boolean()) throw ParseError(at + "/enabled", "expected a boolean");
            a.control.enabled = en->get<bool>();
        }
        if (const auto* req = optional_array(c, "required_predecessors", at)) {
            for (std::size_t i = 0; i < req->size(); ++i) {
                if (!(*req)[i].is_string())
                    throw ParseError(at + "/required_predecessors/" + std::to_string(i),
                                     "expected a string");
                a.control.required_predecessors.push_back((*req)[i].get<std::string>());
            }
        }
        a.control.knowledge =
            knowledge_list_from_json(optional_array(c, "knowledge", at), at + "/knowledge");
        a.control.examples =
            examples_from_json(optional_array(c, "examples", at), true, at + "/examples");
    }
    const auto at = where + "/execution";
    const auto& e = require(j, "execution", where);
    a.execution.subtask_description = require_string(e, "subtask_description", at);
    a.execution.output_description = require_string(e, "output_description", at);
    a.execution.knowledge =
        knowledge_list_from_json(optional_array(e, "knowledge", at), at + "/knowledge");
    a.execution.examples =
        examples_from_json(optional_array(e, "examples", at), false, at + "/examples");
    return a;
}

Json to_json(const Violation& violation) {
    return std::visit(
        [&](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            Json j;
            if constexpr (std::is_same_v<T, CycleViolation>) {
                j["type"] = "CycleViolation";
                j["agents"] = v.agents;
            } else if constexpr (std::is_same_v<T, EmptyFieldViolation>) {
                j["type"] = "EmptyFieldViolation";
                j["agent_index"] = v.agent_index;
                j["agent"] = v.agent;
                j["field"] = to_string(v.field);
            } else {
                j["type"] = "DuplicateNameViolation";
                j["name"] = v.name;
            }
            j["message"] = describe(violation);
            return j;
        },
        violation);
}

Json lan_to_json(const Lan& lan) {
    Json doc;
    doc["version"] = kLanSchemaVersion;
    doc["task_description"] = lan.task_description;
    doc["input_description"] = lan.input_description;
    doc["output_description"] = lan.output_description;
    doc["agents"] = Json::array();
    for (const auto& a : lan.agents) doc["agents"].push_back(to_json(a));
    doc["edges"] = Json::array();
    for (const auto& e : lan.edges) doc["edges"].push_back(Json::array({e.source, e.target}));
    return doc;
}

Lan lan_from_json(const Json& doc) {
    const std::string root;
    if (!doc.is_object()) throw ParseError("/", "expected an object");
    const auto& version = require(doc, "version", root);
    if (!version.is_number_integer()) throw ParseError("/version", "expected an integer");
    if (version.get<long long>() != kLanSchemaVersion) throw SchemaVersionError(version.get<long long>());

    Lan lan;
    lan.task_description = require_string(doc, "task_description", root);
    lan.input_description = optional_string(doc, "input_description", root);
    lan.output_description = optional_string(doc, "output_description", root);
    const auto& agents = require_array(doc, "agents", root);
    for (std::size_t i = 0; i < agents.size(); ++i)
        lan.agents.push_back(agent_from_json(agents[i], "/agents/" + std::to_string(i)));
    const auto& edges = require_array(doc, "edges", root);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
            throw ParseError("/edges/" + std::to_string(i), "expected [source, target]");
        lan.edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
    }
    return lan;
}

std::string serialize_lan(const Lan& lan) { return lan_to_json(lan).dump(2) + "\n"; }

Json parse_json(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError("byte " + std::to_string(e.byte), e.what());
    }
}

Lan deserialize_lan(std::string_view text) { return lan_from_json(parse_json(text)); }

}  // namespace lanforge
