#include "rwg/corpus.hpp"

#include <array>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "rwg/errors.hpp"
#include "text_util.hpp"

namespace rwg {

using nlohmann::json;
using detail::trim;

const Section* Paper::find_section(const SectionName& name) const {
    const std::string wanted = trim(name);
    for (const auto& s : sections) {
        if (s.name == wanted) return &s;
    }
    return nullptr;
}

const Paper& TaskInstance::paper(PaperId id) const {
    if (id == 0) return citing;
    if (id < 0 || id > n_refs()) {
        throw UnknownNodeError("no paper with id " + std::to_string(id));
    }
    return references[static_cast<size_t>(id) - 1];
}

int TaskInstance::total_sections() const {
    int total = static_cast<int>(citing.sections.size());
    for (const auto& r : references) total += static_cast<int>(r.sections.size());
    return total;
}

bool is_related_work_name(const SectionName& name) {
    static const std::array<const char*, 4> names = {
        "related work", "related works", "prior work", "background and related work"};
    const std::string n = detail::to_lower(trim(name));
    for (const char* cand : names) {
        if (n == cand) return true;
    }
    return false;
}

Paper strip_related_work(const Paper& paper) {
    Paper out = paper;
    out.sections.clear();
    for (const auto& s : paper.sections) {
        if (!is_related_work_name(s.name)) out.sections.push_back(s);
    }
    for (size_t i = 0; i < out.sections.size(); ++i) {
        out.sections[i].index = static_cast<int>(i) + 1;
    }
    return out;
}

std::vector<std::pair<PaperId, std::string>> abstracts(const TaskInstance& instance) {
    std::vector<std::pair<PaperId, std::string>> out;
    out.reserve(static_cast<size_t>(instance.n_refs()) + 1);
    out.emplace_back(0, instance.citing.abstract_text());
    for (const auto& r : instance.references) out.emplace_back(r.id, r.abstract_text());
    return out;
}

namespace {

std::set<PaperId> resolve_keys(const json& keys, const std::map<std::string, PaperId>& key_map,
                               int n_refs, PaperId self, const std::string& where) {
    std::set<PaperId> out;
    if (keys.is_null()) return out;
    if (!keys.is_array()) throw ParseError(where + ": cites must be an array of keys");
    for (const auto& k : keys) {
        if (!k.is_string()) throw ParseError(where + ": citation keys must be strings");
        auto it = key_map.find(k.get<std::string>());
        if (it == key_map.end()) continue;  // keys outside the instance are dropped
        PaperId id = it->second;
        if (id == self || id < 0 || id > n_refs) continue;
        out.insert(id);
    }
    return out;
}

Paper parse_paper(const json& j, const std::map<std::string, PaperId>& key_map, int n_refs,
                  const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": paper must be an object");
    Paper p;
    if (!j.contains("id") || !j["id"].is_number_integer()) {
        throw ParseError(where + ": missing integer id");
    }
    p.id = j["id"].get<int>();
    p.title = j.value("title", std::string());

    if (!j.contains("sections") || !j["sections"].is_array()) {
        throw ParseError(where + ": missing sections array");
    }
    std::set<std::string> seen_names;
    for (const auto& js : j["sections"]) {
        Section s;
        s.name = trim(js.value("name", std::string()));
        s.text = js.value("text", std::string());  // empty bodies are permitted
        s.index = static_cast<int>(p.sections.size()) + 1;
        if (s.name.empty()) {
            throw ValidationError(where + ": section " + std::to_string(s.index) +
                                  " has an empty name");
        }
        if (!seen_names.insert(s.name).second) {
            throw ValidationError(where + ": duplicate section name \"" + s.name + "\"");
        }
        p.sections.push_back(std::move(s));
    }
    if (p.sections.empty()) {
        throw ValidationError(where + ": no sections (missing abstract)");
    }

    p.cited_ids = resolve_keys(j.value("cites", json()), key_map, n_refs, p.id, where);

    if (j.contains("rws_sentences")) {
        if (!j["rws_sentences"].is_array()) {
            throw ParseError(where + ": rws_sentences must be an array");
        }
        for (const auto& jsent : j["rws_sentences"]) {
            RwsSentence sent;
            sent.text = jsent.value("text", std::string());
            // self is allowed here; pair expansion skips i == j anyway
            sent.cites = resolve_keys(jsent.value("cites", json()), key_map, n_refs,
                                      /*self=*/-1, where);
            p.rws_sentences.push_back(std::move(sent));
        }
    }
    return p;
}

}  // namespace

TaskInstance parse_instance(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("instance is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("citing") || !j.contains("references")) {
        throw ParseError("instance must be an object with citing and references");
    }
    if (!j["references"].is_array()) throw ParseError("references must be an array");

    std::map<std::string, PaperId> key_map;
    if (j.contains("key_map")) {
        if (!j["key_map"].is_object()) throw ParseError("key_map must be an object");
        for (const auto& [key, val] : j["key_map"].items()) {
            if (!val.is_number_integer()) throw ParseError("key_map values must be integers");
            key_map[key] = val.get<int>();
        }
    }

    const int n_refs = static_cast<int>(j["references"].size());

    TaskInstance inst;
    inst.citing = parse_paper(j["citing"], key_map, n_refs, "citing");
    if (inst.citing.id != 0) throw ValidationError("citing paper must have id 0");
    for (const auto& s : inst.citing.sections) {
        if (is_related_work_name(s.name)) {
            throw ValidationError("citing paper retains a related-work section \"" + s.name +
                                  "\"");
        }
    }

    std::vector<Paper> refs;
    for (size_t i = 0; i < j["references"].size(); ++i) {
        refs.push_back(parse_paper(j["references"][i], key_map, n_refs,
                                   "references[" + std::to_string(i) + "]"));
    }
    std::sort(refs.begin(), refs.end(), [](const Paper& a, const Paper& b) { return a.id < b.id; });
    for (int i = 0; i < n_refs; ++i) {
        if (refs[static_cast<size_t>(i)].id != i + 1) {
            throw ValidationError("reference ids must be exactly 1.." + std::to_string(n_refs) +
                                  " with no gaps or duplicates");
        }
    }
    inst.references = std::move(refs);
    inst.ground_truth_rws = j.value("ground_truth_rws", std::string());

    if (inst.total_sections() < inst.n_refs() + 1) {
        throw ValidationError("instance has fewer sections than papers");
    }
    return inst;
}

TaskInstance load_instance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open instance file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_instance(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

namespace {

json paper_to_json(const Paper& p) {
    json j;
    j["id"] = p.id;
    j["title"] = p.title;
    json sections = json::array();
    for (const auto& s : p.sections) sections.push_back({{"name", s.name}, {"text", s.text}});
    j["sections"] = std::move(sections);
    json cites = json::array();
    for (PaperId id : p.cited_ids) cites.push_back(std::to_string(id));
    j["cites"] = std::move(cites);
    json sents = json::array();
    for (const auto& sent : p.rws_sentences) {
        json keys = json::array();
        for (PaperId id : sent.cites) keys.push_back(std::to_string(id));
        sents.push_back({{"text", sent.text}, {"cites", std::move(keys)}});
    }
    j["rws_sentences"] = std::move(sents);
    return j;
}

}  // namespace

std::string serialize_instance(const TaskInstance& instance) {
    // Canonical form: citation keys are decimal id strings with an identity
    // key_map, so the result reloads to an equal instance.
    json j;
    j["citing"] = paper_to_json(instance.citing);
    json refs = json::array();
    for (const auto& r : instance.references) refs.push_back(paper_to_json(r));
    j["references"] = std::move(refs);
    json key_map = json::object();
    for (int id = 0; id <= instance.n_refs(); ++id) key_map[std::to_string(id)] = id;
    j["key_map"] = std::move(key_map);
    if (!instance.ground_truth_rws.empty()) j["ground_truth_rws"] = instance.ground_truth_rws;
    return j.dump(2);
}

}  // namespace rwg
