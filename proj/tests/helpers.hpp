#pragma once

// Shared fixtures for the test suites: synthetic QA instances, noise pools,
// temp directories and a CLI runner.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ragcal/context.hpp"
#include "ragcal/jsonl.hpp"
#include "ragcal/types.hpp"

namespace testutil {

namespace fs = std::filesystem;

inline ragcal::QAInstance make_instance(int i) {
    ragcal::QAInstance inst;
    inst.id = "q" + std::to_string(1000 + i);
    inst.question = "Which landmark anchors district " + std::to_string(i) + " of Veridia?";
    inst.gold_answer = "Aster Spire " + std::to_string(i);
    inst.answer_aliases = {"the aster spire " + std::to_string(i)};
    ragcal::Passage gold;
    gold.category = ragcal::PassageCategory::Gold;
    gold.text = "District " + std::to_string(i) +
                " of Veridia grew around a single tower. Its anchor landmark is Aster Spire " +
                std::to_string(i) + ". The spire was finished long before the ring road. "
                "Visitors still enter through the old gate.";
    inst.gold_passage = gold;
    inst.dataset_tag = "synthetic";
    return inst;
}

inline ragcal::NoisePool make_pool(const ragcal::QAInstance& inst, int n_cf, int n_rel, int n_irr) {
    ragcal::NoisePool pool;
    for (int j = 0; j < n_cf; ++j) {
        ragcal::Passage p;
        p.category = ragcal::PassageCategory::Counterfactual;
        p.supported_answer = "Borel Obelisk " + inst.id + "-" + std::to_string(j);
        p.text = "Older guidebooks about " + inst.id + " claim the district centers on " +
                 *p.supported_answer + ". The claim repeats across several reprints. "
                 "Street maps of that era agree. Local archives kept the error alive.";
        pool.cf.push_back(p);
    }
    for (int j = 0; j < n_rel; ++j) {
        ragcal::Passage p;
        p.category = j % 3 == 0   ? ragcal::PassageCategory::RelevantEntity
                     : j % 3 == 1 ? ragcal::PassageCategory::RelevantRelation
                                  : ragcal::PassageCategory::RelevantTheme;
        p.text = "Veridia's districts each maintain civic records (" + inst.id + "/" +
                 std::to_string(j) + "). Budgets are published every spring. "
                 "The archive notes nothing about landmarks. Most entries cover road repairs.";
        p.shared_keywords = std::vector<std::string>{"Veridia", "district"};
        pool.rel.push_back(p);
    }
    for (int j = 0; j < n_irr; ++j) {
        ragcal::Passage p;
        p.category = ragcal::PassageCategory::Irrelevant;
        p.text = "Deep-sea vents host colonies of tube worms (" + inst.id + "/" +
                 std::to_string(j) + "). The worms rely on chemosynthetic bacteria. "
                 "Their plumes retract when currents shift. Nothing here concerns cities.";
        pool.irr.push_back(p);
    }
    return pool;
}

inline std::vector<ragcal::LabeledPassage> pool_to_labeled(const std::string& query_id,
                                                           const ragcal::NoisePool& pool) {
    std::vector<ragcal::LabeledPassage> out;
    for (const auto& p : pool.cf) out.push_back({query_id, p});
    for (const auto& p : pool.rel) out.push_back({query_id, p});
    for (const auto& p : pool.irr) out.push_back({query_id, p});
    return out;
}

inline fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() /
                         ("ragcal_" + tag + "_" + std::to_string(::getpid()) + "_" +
                          std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct CliResult {
    int exit_code = -1;
    std::string output;  // combined stdout+stderr
};

inline CliResult run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path log = workdir / "cli_output.log";
    const std::string cmd = "cd " + workdir.string() + " && " + std::string(RAGCAL_CLI_PATH) + " " +
                            args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    result.output.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return result;
}

inline void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// A minimal config file pointing every path into `dir`.
inline fs::path write_config(const fs::path& dir, const std::string& extra = "") {
    const fs::path cfg = dir / "config.toml";
    std::string text;
    text += "[paths]\n";
    text += "instances = \"" + (dir / "instances.jsonl").string() + "\"\n";
    text += "passages = \"" + (dir / "passages.jsonl").string() + "\"\n";
    text += "contexts = \"" + (dir / "contexts.jsonl").string() + "\"\n";
    text += "responses = \"" + (dir / "responses.jsonl").string() + "\"\n";
    text += "records = \"" + (dir / "records.jsonl").string() + "\"\n";
    text += "out_dir = \"" + dir.string() + "\"\n";
    text += "[endpoint]\n";
    text += "model = \"mock-model\"\n";
    text += extra;
    write_file(cfg, text);
    return cfg;
}

}  // namespace testutil
