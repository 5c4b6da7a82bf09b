#pragma once

#include <map>
#include <string>
#include <vector>

#include "rwg/corpus.hpp"
#include "rwg/graph.hpp"
#include "rwg/memory.hpp"

namespace rwg {

// Versioned prompt template set. The built-in set is embedded at build time
// from templates/<version>/ in the source tree; from_directory loads the same
// file layout from disk, which lets operators override prompts without
// rebuilding.
class PromptLibrary {
public:
    static const std::vector<std::string>& template_names();

    static PromptLibrary builtin(const std::string& version = "v1");           // ConfigError on unknown version
    static PromptLibrary from_directory(const std::string& dir, const std::string& version_label);

    const std::string& get(const std::string& name) const;  // ConfigError on unknown name
    const std::string& version() const { return version_; }

private:
    std::string version_;
    std::map<std::string, std::string> templates_;
};

// Replaces {name} tokens (lowercase identifiers) with values. A token that
// looks like a placeholder but has no value is an error; brace text that is
// not an identifier (e.g. JSON) passes through untouched.
std::string render_template(const std::string& tpl, const std::map<std::string, std::string>& values);

// Prompt building blocks shared by the agents.
std::string render_abstracts_block(const TaskInstance& instance);
std::string render_history_block(const ReadingHistory& history);
std::string render_neighborhood_block(const Neighborhood& neighborhood);
std::vector<std::string> paper_titles(const TaskInstance& instance);  // indexed by id

}  // namespace rwg
