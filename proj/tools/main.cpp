// Command line front end. Links the rwg shared library through its C API
// only; everything here is file plumbing and output formatting.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rwg/rwg.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUserError = 1;
constexpr int kExitBackendError = 2;

int exit_code_for(rwg_status status) {
    switch (status) {
        case RWG_OK: return kExitOk;
        case RWG_ERR_BACKEND: return kExitBackendError;
        default: return kExitUserError;
    }
}

struct OwnedString {
    char* ptr = nullptr;
    ~OwnedString() { rwg_string_free(ptr); }
    std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

struct OwnedInstance {
    rwg_instance* ptr = nullptr;
    ~OwnedInstance() { rwg_instance_free(ptr); }
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// Instance files of a corpus directory: every *.json except the manifest.
std::vector<fs::path> corpus_files(const fs::path& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) return files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() != ".json") continue;
        if (entry.path().filename() == "manifest.json") continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads, preserving per-index
// result slots.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    const int count = std::min(jobs, n);
    workers.reserve(static_cast<size_t>(count));
    for (int w = 0; w < count; ++w) {
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : workers) t.join();
}

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& out_dir,
               bool export_graphs) {
    std::vector<fs::path> files;
    for (const auto& input : inputs) {
        if (fs::is_directory(input)) {
            for (const auto& f : corpus_files(input)) files.push_back(f);
        } else {
            files.emplace_back(input);
        }
    }
    if (files.empty()) {
        std::cerr << "error: empty corpus (no instance files)\n";
        return kExitUserError;
    }
    fs::create_directories(out_dir);

    json manifest = json::array();
    int failures = 0;
    for (const auto& file : files) {
        OwnedInstance inst;
        const rwg_status status = rwg_instance_load(file.string().c_str(), &inst.ptr);
        if (status != RWG_OK) {
            std::cerr << file.string() << ": " << rwg_last_error() << "\n";
            ++failures;
            continue;
        }
        const std::string id = file.stem().string();
        manifest.push_back({{"id", id},
                            {"n_refs", rwg_instance_ref_count(inst.ptr)},
                            {"total_sections", rwg_instance_section_total(inst.ptr)}});
        write_file(fs::path(out_dir) / (id + ".json"), read_file(file));
        if (export_graphs) {
            for (const char* kind : {"citation", "cooccurrence"}) {
                OwnedString tsv;
                if (rwg_graph_edges_tsv(inst.ptr, kind, &tsv.ptr) == RWG_OK) {
                    write_file(fs::path(out_dir) / (id + "." + kind + ".tsv"), tsv.str());
                }
            }
        }
        std::cout << file.string() << ": ok\n";
    }
    std::sort(manifest.begin(), manifest.end(),
              [](const json& a, const json& b) { return a["id"] < b["id"]; });
    write_file(fs::path(out_dir) / "manifest.json", json{{"instances", manifest}}.dump(2) + "\n");
    std::cout << manifest.size() << " instance(s) ingested, " << failures << " failed\n";
    return failures == 0 ? kExitOk : kExitUserError;
}

int cmd_run(const std::string& corpus_dir, const std::string& config_path,
            const std::string& out_dir, int jobs) {
    const auto files = corpus_files(corpus_dir);
    if (files.empty()) {
        std::cerr << "error: no instances in " << corpus_dir << "\n";
        return kExitUserError;
    }
    std::string config_json;
    try {
        config_json = read_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    }
    const std::string base_dir = fs::absolute(config_path).parent_path().string();
    fs::create_directories(out_dir);

    std::mutex io_mu;
    std::atomic<int> ok{0}, user_failed{0}, backend_failed{0};
    parallel_for(static_cast<int>(files.size()), jobs, [&](int i) {
        const fs::path& file = files[static_cast<size_t>(i)];
        const std::string id = file.stem().string();
        OwnedInstance inst;
        rwg_status status = rwg_instance_load(file.string().c_str(), &inst.ptr);
        if (status == RWG_OK) {
            OwnedString log, rws;
            status = rwg_run(inst.ptr, config_json.c_str(), base_dir.c_str(), &log.ptr, &rws.ptr);
            if (log.ptr) {  // partial logs are kept on failure
                write_file(fs::path(out_dir) / (id + ".log.jsonl"), log.str());
            }
            if (status == RWG_OK) {
                write_file(fs::path(out_dir) / (id + ".rws.txt"), rws.str());
            }
        }
        std::lock_guard<std::mutex> lock(io_mu);
        if (status == RWG_OK) {
            ++ok;
            std::cout << id << ": ok\n";
        } else {
            (status == RWG_ERR_BACKEND ? ++backend_failed : ++user_failed);
            std::cerr << id << ": " << rwg_last_error() << "\n";
        }
    });
    std::cout << "ran " << ok << "/" << files.size() << " instance(s), "
              << (user_failed + backend_failed) << " failed\n";
    if (backend_failed > 0) return kExitBackendError;
    return user_failed > 0 ? kExitUserError : kExitOk;
}

int cmd_evaluate(const std::string& rws_dir, const std::string& corpus_dir,
                 const std::string& judges_path, const std::string& out_dir,
                 const std::string& name, int jobs) {
    const auto files = corpus_files(corpus_dir);
    if (files.empty()) {
        std::cerr << "error: no instances in " << corpus_dir << "\n";
        return kExitUserError;
    }
    std::string judges_json, judges_dir;
    if (!judges_path.empty()) {
        try {
            judges_json = read_file(judges_path);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUserError;
        }
        judges_dir = fs::absolute(judges_path).parent_path().string();
    }
    fs::create_directories(out_dir);

    std::vector<json> docs(files.size());
    std::mutex io_mu;
    std::atomic<int> user_failed{0}, backend_failed{0};
    parallel_for(static_cast<int>(files.size()), jobs, [&](int i) {
        const fs::path& file = files[static_cast<size_t>(i)];
        const std::string id = file.stem().string();
        const fs::path rws_path = fs::path(rws_dir) / (id + ".rws.txt");

        std::string problem;
        rwg_status status = RWG_OK;
        if (!fs::exists(rws_path)) {
            problem = "missing generated rws: " + rws_path.string();
            status = RWG_ERR_IO;
        } else {
            OwnedInstance inst;
            status = rwg_instance_load(file.string().c_str(), &inst.ptr);
            if (status == RWG_OK) {
                OwnedString eval;
                status = rwg_evaluate(inst.ptr, read_file(rws_path).c_str(),
                                      judges_json.empty() ? nullptr : judges_json.c_str(),
                                      judges_dir.empty() ? nullptr : judges_dir.c_str(),
                                      &eval.ptr);
                if (status == RWG_OK) {
                    docs[static_cast<size_t>(i)] = {{"doc_id", id},
                                                    {"eval", json::parse(eval.str())}};
                }
            }
            if (status != RWG_OK) problem = rwg_last_error();
        }
        if (status != RWG_OK) {
            std::lock_guard<std::mutex> lock(io_mu);
            (status == RWG_ERR_BACKEND ? ++backend_failed : ++user_failed);
            std::cerr << id << ": " << problem << "\n";
        }
    });

    json doc_array = json::array();
    for (auto& d : docs) {
        if (!d.is_null()) doc_array.push_back(std::move(d));
    }
    if (doc_array.empty()) {
        std::cerr << "error: nothing evaluated\n";
        return backend_failed > 0 ? kExitBackendError : kExitUserError;
    }
    OwnedString report, csv;
    const rwg_status status = rwg_report_aggregate(doc_array.dump().c_str(), name.c_str(),
                                                   &report.ptr, &csv.ptr);
    if (status != RWG_OK) {
        std::cerr << "error: " << rwg_last_error() << "\n";
        return exit_code_for(status);
    }
    write_file(fs::path(out_dir) / "report.json", report.str() + "\n");
    write_file(fs::path(out_dir) / "report.csv", csv.str());
    std::cout << "evaluated " << doc_array.size() << "/" << files.size() << " document(s) -> "
              << (fs::path(out_dir) / "report.json").string() << "\n";
    if (backend_failed > 0) return kExitBackendError;
    return user_failed > 0 ? kExitUserError : kExitOk;
}

int cmd_stats(const std::string& log_dir, const std::string& csv_path) {
    std::vector<fs::path> logs;
    for (const auto& entry : fs::directory_iterator(log_dir)) {
        if (entry.is_regular_file() && entry.path().string().ends_with(".log.jsonl")) {
            logs.push_back(entry.path());
        }
    }
    std::sort(logs.begin(), logs.end());
    if (logs.empty()) {
        std::cerr << "error: no run logs in " << log_dir << "\n";
        return kExitUserError;
    }

    const std::vector<std::string> categories = {"Introduction", "Related Work", "Methodology",
                                                 "Experiments", "Conclusion", "Other"};
    std::ostringstream csv;
    csv << "log,reads,total_sections,proportion_read";
    for (const auto& c : categories) csv << ',' << c;
    csv << '\n';

    std::cout << "log                           reads  total  proportion\n";
    int failures = 0;
    for (const auto& log : logs) {
        OwnedString stats;
        const rwg_status status = rwg_reading_stats(read_file(log).c_str(), &stats.ptr);
        if (status != RWG_OK) {
            std::cerr << log.string() << ": " << rwg_last_error() << "\n";
            ++failures;
            continue;
        }
        const json j = json::parse(stats.str());
        std::string id = log.filename().string();
        char line[160];
        std::snprintf(line, sizeof(line), "%-28s  %5d  %5d  %10.4f", id.c_str(),
                      j["reads"].get<int>(), j["total_sections"].get<int>(),
                      j["proportion_read"].get<double>());
        std::cout << line;
        for (const auto& [cat, frac] : j["per_category"].items()) {
            char cell[64];
            std::snprintf(cell, sizeof(cell), "  %s=%.4f", cat.c_str(), frac.get<double>());
            std::cout << cell;
        }
        std::cout << "\n";

        csv << id << ',' << j["reads"].get<int>() << ',' << j["total_sections"].get<int>() << ','
            << j["proportion_read"].get<double>();
        for (const auto& c : categories) {
            csv << ',';
            if (j["per_category"].contains(c)) csv << j["per_category"][c].get<double>();
        }
        csv << '\n';
    }
    if (!csv_path.empty()) write_file(csv_path, csv.str());
    return failures == 0 ? kExitOk : kExitUserError;
}

int cmd_compare(const std::vector<std::string>& report_paths, const std::string& csv_path) {
    if (report_paths.size() < 2) {
        std::cerr << "error: need >= 2 report files to compare\n";
        return kExitUserError;
    }
    std::vector<std::string> contents;
    std::vector<const char*> pointers;
    for (const auto& path : report_paths) {
        try {
            contents.push_back(read_file(path));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUserError;
        }
    }
    for (const auto& c : contents) pointers.push_back(c.c_str());

    OwnedString text, csv;
    const rwg_status status = rwg_compare(pointers.data(), static_cast<int>(pointers.size()),
                                          &text.ptr, &csv.ptr);
    if (status != RWG_OK) {
        std::cerr << "error: " << rwg_last_error() << "\n";
        return exit_code_for(status);
    }
    std::cout << text.str();
    if (!csv_path.empty()) write_file(csv_path, csv.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"related-work generation pipeline"};
    app.require_subcommand(1);

    std::vector<std::string> ingest_inputs;
    std::string ingest_out;
    bool ingest_graphs = false;
    auto* ingest = app.add_subcommand("ingest", "validate instance files into a corpus directory");
    ingest->add_option("paths", ingest_inputs, "instance files or directories")->required();
    ingest->add_option("--out", ingest_out, "output corpus directory")->required();
    ingest->add_flag("--export-graphs", ingest_graphs, "also write relation graph edge lists");

    std::string run_corpus, run_config, run_out;
    int run_jobs = 1;
    auto* run = app.add_subcommand("run", "run the pipeline over a corpus");
    run->add_option("--corpus", run_corpus, "corpus directory")->required();
    run->add_option("--config", run_config, "run config file")->required();
    run->add_option("--out", run_out, "output directory for logs and rws files")->required();
    run->add_option("--jobs", run_jobs, "parallel documents (default 1)");

    std::string eval_rws, eval_corpus, eval_judges, eval_out, eval_name = "default";
    int eval_jobs = 1;
    auto* evaluate = app.add_subcommand("evaluate", "compute metrics (and judge scores) for generated rws files");
    evaluate->add_option("--rws", eval_rws, "directory with <id>.rws.txt files")->required();
    evaluate->add_option("--corpus", eval_corpus, "corpus directory")->required();
    evaluate->add_option("--judges", eval_judges, "judges config (enables LLM judging)");
    evaluate->add_option("--out", eval_out, "output directory for report.json / report.csv")->required();
    evaluate->add_option("--name", eval_name, "config name recorded in the report");
    evaluate->add_option("--jobs", eval_jobs, "parallel documents (default 1)");

    std::string stats_logs, stats_csv;
    auto* stats = app.add_subcommand("stats", "reading statistics from run logs");
    stats->add_option("--logs", stats_logs, "directory with *.log.jsonl files")->required();
    stats->add_option("--csv", stats_csv, "also write a CSV table");

    std::vector<std::string> compare_paths;
    std::string compare_csv;
    auto* compare = app.add_subcommand("compare", "compare >= 2 corpus reports");
    compare->add_option("reports", compare_paths, "report.json files");
    compare->add_option("--csv", compare_csv, "also write a CSV table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(ingest_inputs, ingest_out, ingest_graphs);
        if (*run) return cmd_run(run_corpus, run_config, run_out, run_jobs);
        if (*evaluate) {
            return cmd_evaluate(eval_rws, eval_corpus, eval_judges, eval_out, eval_name,
                                eval_jobs);
        }
        if (*stats) return cmd_stats(stats_logs, stats_csv);
        if (*compare) return cmd_compare(compare_paths, compare_csv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    }
    return kExitUserError;
}
