#include "rwg/prompts.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "rwg/errors.hpp"

namespace rwg {

namespace detail {
const std::map<std::string, std::string>& builtin_templates_v1();  // generated
}

const std::vector<std::string>& PromptLibrary::template_names() {
    static const std::vector<std::string> names = {
        "selector_initial", "selector_vanilla", "selector_graph", "reader",
        "reader_compress",  "writer",           "judge",          "exemplar_rws"};
    return names;
}

PromptLibrary PromptLibrary::builtin(const std::string& version) {
    if (version != "v1") {
        throw ConfigError("unknown template version \"" + version + "\"");
    }
    PromptLibrary lib;
    lib.version_ = version;
    lib.templates_ = detail::builtin_templates_v1();
    return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::string& dir,
                                            const std::string& version_label) {
    PromptLibrary lib;
    lib.version_ = version_label;
    for (const auto& name : template_names()) {
        const std::string path = dir + "/" + name + ".txt";
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("missing prompt template: " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        lib.templates_[name] = buf.str();
    }
    return lib;
}

const std::string& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) {
        throw ConfigError("unknown prompt template \"" + name + "\"");
    }
    return it->second;
}

std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tpl.size());
    size_t pos = 0;
    while (pos < tpl.size()) {
        const char c = tpl[pos];
        if (c != '{') {
            out.push_back(c);
            ++pos;
            continue;
        }
        // A placeholder is {lowercase_identifier}. Anything else (JSON text,
        // stray braces) passes through literally.
        size_t end = pos + 1;
        while (end < tpl.size() && (std::islower(static_cast<unsigned char>(tpl[end])) ||
                                    tpl[end] == '_')) {
            ++end;
        }
        if (end > pos + 1 && end < tpl.size() && tpl[end] == '}') {
            const std::string key = tpl.substr(pos + 1, end - pos - 1);
            auto it = values.find(key);
            if (it == values.end()) {
                throw ConfigError("template placeholder {" + key + "} has no value");
            }
            out += it->second;
            pos = end + 1;
        } else {
            out.push_back(c);
            ++pos;
        }
    }
    return out;
}

std::string render_abstracts_block(const TaskInstance& instance) {
    std::ostringstream out;
    for (PaperId id = 0; id <= instance.n_refs(); ++id) {
        const Paper& p = instance.paper(id);
        out << "Paper " << id;
        if (id == 0) out << " (the paper being written)";
        if (!p.title.empty()) out << ": " << p.title;
        out << "\n  Sections: ";
        for (size_t i = 0; i < p.sections.size(); ++i) {
            if (i > 0) out << "; ";
            out << p.sections[i].name;
        }
        out << "\n  Abstract: " << p.abstract_text() << "\n";
    }
    return out.str();
}

std::string render_history_block(const ReadingHistory& history) {
    if (history.empty()) return "(nothing read yet)";
    std::ostringstream out;
    size_t i = 0;
    for (const auto& [paper, section] : history.entries()) {
        if (i > 0) out << '\n';
        out << ++i << ". (paper " << paper << ", " << section << ")";
    }
    return out.str();
}

std::string render_neighborhood_block(const Neighborhood& neighborhood) {
    std::ostringstream out;
    out << "current paper: " << neighborhood.center << "; admissible papers: ";
    bool first = true;
    for (PaperId id : neighborhood.members) {
        if (!first) out << ", ";
        out << id;
        first = false;
    }
    return out.str();
}

std::vector<std::string> paper_titles(const TaskInstance& instance) {
    std::vector<std::string> titles;
    titles.reserve(static_cast<size_t>(instance.n_refs()) + 1);
    for (PaperId id = 0; id <= instance.n_refs(); ++id) {
        titles.push_back(instance.paper(id).title);
    }
    return titles;
}

}  // namespace rwg
