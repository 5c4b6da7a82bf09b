#include "rwg/agents.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "rwg/errors.hpp"
#include "text_util.hpp"

namespace rwg {

namespace {

constexpr const char* kReaderSystem =
    "You are the reader of a related-work writing workflow; you maintain its working memory.";
constexpr const char* kWriterSystem =
    "You are the writer of a related-work writing workflow.";

// Truncates to a byte budget without splitting a UTF-8 sequence.
std::string truncate_utf8(const std::string& s, size_t max_bytes) {
    if (s.size() <= max_bytes) return s;
    size_t end = max_bytes;
    while (end > 0 && (static_cast<unsigned char>(s[end]) & 0xC0) == 0x80) --end;
    return s.substr(0, end);
}

// Last-resort budget enforcement. Order: scratch, then per-paper notes
// shrunk proportionally (keys survive), then relationship notes dropped from
// the end.
void truncate_to_budget(WorkingMemory& mem, const TokenBudget& budget, const TokenEstimator& est) {
    mem.scratch.clear();
    mem.refresh(est);
    if (enforce_budget(mem, budget)) return;

    for (int round = 0; round < 8 && !enforce_budget(mem, budget); ++round) {
        const double factor =
            0.9 * static_cast<double>(budget.limit) / std::max(1, mem.token_estimate);
        bool shrunk = false;
        for (auto& [id, note] : mem.per_paper_notes) {
            const size_t target = static_cast<size_t>(static_cast<double>(note.size()) * factor);
            if (target < note.size()) {
                note = truncate_utf8(note, target);
                shrunk = true;
            }
        }
        mem.refresh(est);
        if (!shrunk) break;
    }
    while (!enforce_budget(mem, budget) && !mem.relationship_notes.empty()) {
        mem.relationship_notes.pop_back();
        mem.refresh(est);
    }
}

}  // namespace

WorkingMemory read_section(const ReaderRequest& request, LlmBackend& backend,
                           const PromptLibrary& prompts, const TokenEstimator& est) {
    const std::string base_user =
        render_template(prompts.get("reader"),
                        {{"section_name", request.section},
                         {"paper_id", std::to_string(request.paper)},
                         {"budget", std::to_string(request.budget.limit)},
                         {"section_text", request.section_text},
                         {"memory", serialize_memory(request.memory_before)}});
    ChatRequest req;
    req.system = kReaderSystem;
    req.user = base_user;
    req.temperature = request.generation.temperature;
    req.max_reply_tokens = request.generation.max_reply_tokens;

    WorkingMemory mem;
    bool parsed = false;
    std::string reply = backend.complete(req);
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            mem = parse_memory(reply, request.n_refs);
            parsed = true;
            break;
        } catch (const ParseError&) {
            if (attempt == 1) break;
            ChatRequest retry = req;
            retry.user = base_user +
                         "\n\nYour previous reply was not a valid memory document. Reply with "
                         "exactly one JSON object with the fields per_paper_notes (object of "
                         "paper id to note), relationship_notes (array of strings) and scratch "
                         "(string), and nothing else.";
            reply = backend.complete(retry);
        }
    }
    if (!parsed) {
        // Fall back to the prior memory and record the section as read but
        // unmerged, so the writer still knows it was covered.
        mem = request.memory_before;
        mem.relationship_notes.push_back("(paper " + std::to_string(request.paper) + ", " +
                                         request.section + ") was read but not merged into memory");
    }

    mem.refresh(est);
    for (int retry = 0; retry < 2 && !enforce_budget(mem, request.budget); ++retry) {
        ChatRequest compress;
        compress.system = kReaderSystem;
        compress.user = base_user + "\n\n" +
                        render_template(prompts.get("reader_compress"),
                                        {{"tokens", std::to_string(mem.token_estimate)},
                                         {"budget", std::to_string(request.budget.limit)},
                                         {"previous", serialize_memory(mem)}});
        compress.temperature = request.generation.temperature;
        compress.max_reply_tokens = request.generation.max_reply_tokens;
        try {
            mem = parse_memory(backend.complete(compress), request.n_refs);
            mem.refresh(est);
        } catch (const ParseError&) {
            break;  // go straight to truncation
        }
    }
    if (!enforce_budget(mem, request.budget)) {
        truncate_to_budget(mem, request.budget, est);
    }
    return mem;
}

std::vector<std::string> default_writer_instructions() {
    return {
        "Avoid isolated descriptions of each reference.",
        "Explain the relationships between the papers.",
        "Group similar studies together.",
    };
}

GeneratedRws make_generated_rws(const std::string& text, int n_refs) {
    GeneratedRws rws;
    rws.text = text;
    for (const auto& [sentence, ids] : parse_citations(text)) {
        (void)sentence;
        for (int id : ids) {
            if (id >= 1 && id <= n_refs) rws.cited_ids.insert(id);
        }
    }
    return rws;
}

GeneratedRws write_rws(const WriterRequest& request, LlmBackend& backend,
                       const PromptLibrary& prompts) {
    if (request.instructions.size() < 3) {
        throw ConfigError("writer needs at least the three default instructions");
    }
    std::ostringstream instructions;
    for (const auto& line : request.instructions) instructions << "- " << line << '\n';

    ReadingHistory history;
    for (const auto& e : request.history_final) {
        if (!history.contains(e)) history.record(e);
    }

    std::string citing_context;
    if (!request.citing_abstract.empty()) {
        citing_context = "Abstract of Paper 0 (the paper being written):\n" +
                         request.citing_abstract + "\n\n";
    }

    ChatRequest req;
    req.system = kWriterSystem;
    req.user = render_template(prompts.get("writer"),
                               {{"instructions", instructions.str()},
                                {"n_refs", std::to_string(request.n_refs)},
                                {"citing_context", citing_context},
                                {"memory", serialize_memory(request.memory_final)},
                                {"history", render_history_block(history)},
                                {"exemplar", request.exemplar}});
    req.temperature = request.generation.temperature;
    req.max_reply_tokens = request.generation.max_reply_tokens;
    return make_generated_rws(detail::trim(backend.complete(req)), request.n_refs);
}

namespace {

const std::array<const char*, 11> kAbbreviations = {
    "Fig.", "Eq.", "et al.", "e.g.", "i.e.", "vs.", "Dr.", "Prof.", "No.", "Sec.", "Tab."};

// True when the text ending at (and including) position `dot` ends with a
// known abbreviation that is not merely the tail of a longer word.
bool ends_with_abbreviation(const std::string& text, size_t dot) {
    for (const char* raw : kAbbreviations) {
        const std::string abbr(raw);
        if (dot + 1 < abbr.size()) continue;
        const size_t start = dot + 1 - abbr.size();
        if (!std::equal(abbr.begin(), abbr.end(), text.begin() + start,
                        [](char a, char b) {
                            return std::tolower(static_cast<unsigned char>(a)) ==
                                   std::tolower(static_cast<unsigned char>(b));
                        })) {
            continue;
        }
        if (start > 0 && std::isalnum(static_cast<unsigned char>(text[start - 1]))) continue;
        return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> sentences;
    size_t start = 0;
    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        // A boundary needs whitespace and then an uppercase letter or '['.
        size_t next = i + 1;
        if (next >= text.size() || !std::isspace(static_cast<unsigned char>(text[next]))) continue;
        while (next < text.size() && std::isspace(static_cast<unsigned char>(text[next]))) ++next;
        if (next >= text.size()) continue;
        const char lead = text[next];
        if (!(std::isupper(static_cast<unsigned char>(lead)) || lead == '[')) continue;
        if (c == '.' && ends_with_abbreviation(text, i)) continue;
        const std::string sentence = detail::trim(text.substr(start, i - start + 1));
        if (!sentence.empty()) sentences.push_back(sentence);
        start = next;
    }
    const std::string tail = detail::trim(text.substr(start));
    if (!tail.empty()) sentences.push_back(tail);
    return sentences;
}

std::vector<std::pair<std::string, std::set<int>>> parse_citations(const std::string& text) {
    std::vector<std::pair<std::string, std::set<int>>> out;
    for (const auto& sentence : split_sentences(text)) {
        std::set<int> ids;
        size_t open = sentence.find('[');
        while (open != std::string::npos) {
            const size_t close = sentence.find(']', open + 1);
            if (close == std::string::npos) break;
            const std::string inner = sentence.substr(open + 1, close - open - 1);
            std::set<int> group;
            bool numeric = !inner.empty();
            std::stringstream ss(inner);
            std::string piece;
            while (numeric && std::getline(ss, piece, ',')) {
                piece = detail::trim(piece);
                if (!detail::all_digits(piece) || piece.size() > 6) {
                    numeric = false;
                    break;
                }
                group.insert(std::stoi(piece));
            }
            if (numeric) ids.insert(group.begin(), group.end());
            open = sentence.find('[', close + 1);
        }
        out.emplace_back(sentence, std::move(ids));
    }
    return out;
}

}  // namespace rwg
