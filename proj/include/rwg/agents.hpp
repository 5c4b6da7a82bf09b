#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rwg/corpus.hpp"
#include "rwg/llm.hpp"
#include "rwg/memory.hpp"
#include "rwg/prompts.hpp"

namespace rwg {

struct ReaderRequest {
    PaperId paper = 0;
    SectionName section;
    std::string section_text;
    WorkingMemory memory_before;
    TokenBudget budget;
    int n_refs = 0;  // note keys outside 0..n_refs are rejected
    GenerationParams generation{0.0, 4608};
};

// Runs the reader on one section and returns the updated memory. The reply is
// parsed against the memory schema (one schema-reminder re-prompt, then the
// fallback of memory_before plus a read-but-unmerged note). Budget is enforced
// by up to two compress re-prompts, then truncation: scratch first, then
// per-paper notes proportionally, then relationship notes from the end.
WorkingMemory read_section(const ReaderRequest& request, LlmBackend& backend,
                           const PromptLibrary& prompts,
                           const TokenEstimator& est = default_estimator());

struct WriterRequest {
    WorkingMemory memory_final;
    std::vector<std::pair<PaperId, SectionName>> history_final;
    std::string exemplar;
    std::vector<std::string> instructions;  // at least the three defaults
    std::string citing_abstract;            // empty -> omitted from the prompt
    int n_refs = 0;
    GenerationParams generation{0.7, 2048};
};

std::vector<std::string> default_writer_instructions();

struct GeneratedRws {
    std::string text;
    std::set<PaperId> cited_ids;  // subset of 1..N

    bool operator==(const GeneratedRws&) const = default;
};

// Parses rws text: markers outside 1..n_refs are dropped from cited_ids, the
// text is kept verbatim.
GeneratedRws make_generated_rws(const std::string& text, int n_refs);

GeneratedRws write_rws(const WriterRequest& request, LlmBackend& backend,
                       const PromptLibrary& prompts);

// Splits text into sentences and collects the numeric ids cited in each:
// bracket groups of integers like [3] or [1, 4]. Splits at . ! ? followed by
// whitespace and an uppercase letter or '[', except after a known
// abbreviation (Fig., Eq., et al., e.g., i.e., vs., Dr., Prof., No., Sec.,
// Tab.). Ids are returned unfiltered.
std::vector<std::pair<std::string, std::set<int>>> parse_citations(const std::string& text);

std::vector<std::string> split_sentences(const std::string& text);

}  // namespace rwg
