#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace rwg {

// Paper 0 is the citing paper; 1..N are references.
using PaperId = int;

// Trimmed, non-empty, unique within one paper. Compared by exact equality
// after whitespace trimming.
using SectionName = std::string;

struct Section {
    SectionName name;
    int index = 0;  // 1-based and contiguous within a paper; index 1 is the abstract
    std::string text;

    bool operator==(const Section&) const = default;
};

// One sentence of a paper's related-work section plus the papers it cites,
// resolved to ids of this instance.
struct RwsSentence {
    std::string text;
    std::set<PaperId> cites;

    bool operator==(const RwsSentence&) const = default;
};

struct Paper {
    PaperId id = 0;
    std::string title;
    std::vector<Section> sections;
    std::set<PaperId> cited_ids;  // never contains the paper's own id
    std::vector<RwsSentence> rws_sentences;

    const Section* find_section(const SectionName& name) const;
    const std::string& abstract_text() const { return sections.front().text; }

    bool operator==(const Paper&) const = default;
};

// One task instance: the citing paper (with its related-work section already
// removed) plus its N full-text references.
struct TaskInstance {
    Paper citing;                   // id 0
    std::vector<Paper> references;  // ids 1..N, in id order
    std::string ground_truth_rws;   // empty when the source had none

    int n_refs() const { return static_cast<int>(references.size()); }
    const Paper& paper(PaperId id) const;  // throws UnknownNodeError
    int total_sections() const;            // sum of section counts over all papers

    bool operator==(const TaskInstance&) const = default;
};

// Loads and validates one instance from the corpus JSON format. Citation keys
// are resolved through the file's key_map; keys that resolve to nothing are
// dropped. Throws ParseError / ValidationError / IoError.
TaskInstance load_instance(const std::string& path);
TaskInstance parse_instance(const std::string& json_text);

// Canonical JSON for an instance; parse_instance(serialize_instance(x)) == x.
std::string serialize_instance(const TaskInstance& instance);

// True for names in the related-work name set (case-insensitive, trimmed).
bool is_related_work_name(const SectionName& name);

// Copy of the paper with related-work sections removed and the remaining
// indices renumbered from 1. A paper without one is returned unchanged.
Paper strip_related_work(const Paper& paper);

// (id, abstract text) for ids 0..N in id order.
std::vector<std::pair<PaperId, std::string>> abstracts(const TaskInstance& instance);

}  // namespace rwg
