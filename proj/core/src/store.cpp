#include "microsa/experiment.hpp"

#include "microsa/error.hpp"
#include "microsa/textio.hpp"

#include "json_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace microsa {

namespace fs = std::filesystem;

namespace {

constexpr const char* manifest_name = "manifest.json";

std::string manifest_text(const StoreManifest& m) {
    nlohmann::json j;
    j["format"] = m.format;
    j["config_hash"] = m.config_hash;
    j["code_version"] = m.code_version;
    j["grid"] = detail::grid_to_json(m.grid);
    return j.dump(2) + "\n";
}

StoreManifest parse_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw LookupError("no store manifest at " + path);
    }
    try {
        const auto j = nlohmann::json::parse(in);
        StoreManifest m;
        m.format = j.at("format").get<int>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.code_version = j.at("code_version").get<std::string>();
        m.grid = detail::grid_from_json(j.at("grid"));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed store manifest " + path + ": " + e.what());
    }
}

/// Writes through a temporary file and renames it into place.
void write_atomically(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.flush();
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::vector<std::string> list_ids(const fs::path& dir, const std::string& extension) {
    std::vector<std::string> ids;
    if (!fs::exists(dir)) {
        return ids;
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == extension) {
            ids.push_back(entry.path().stem().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

} // namespace

ResultStore ResultStore::create(const std::string& dir, const StoreManifest& manifest, bool resume) {
    const fs::path root(dir);
    const fs::path manifest_path = root / manifest_name;
    if (fs::exists(root) && !fs::is_empty(root)) {
        if (!resume) {
            throw StateError("store directory " + dir + " is not empty (use --resume to continue it)");
        }
        const StoreManifest existing = parse_manifest(manifest_path.string());
        if (!(existing == manifest)) {
            throw StateError("store " + dir + " was created from a different configuration or grid");
        }
    } else {
        fs::create_directories(root);
        write_atomically(manifest_path, manifest_text(manifest));
    }
    fs::create_directories(root / "points");
    fs::create_directories(root / "failed");
    return ResultStore(dir, manifest);
}

ResultStore ResultStore::open(const std::string& dir) {
    return ResultStore(dir, parse_manifest((fs::path(dir) / manifest_name).string()));
}

bool ResultStore::completed(const std::string& point_id) const {
    return fs::exists(fs::path(dir_) / "points" / (point_id + ".tsv"));
}

std::vector<std::string> ResultStore::completed_ids() const { return list_ids(fs::path(dir_) / "points", ".tsv"); }

std::vector<std::string> ResultStore::failed_ids() const { return list_ids(fs::path(dir_) / "failed", ".txt"); }

void ResultStore::write_point(const std::string& point_id, const std::vector<OutputRecord>& records) const {
    std::string content;
    content.reserve(records.size() * 64);
    for (const auto& r : records) {
        content += point_id;
        content += '\t';
        content += r.region;
        content += '\t';
        content += std::to_string(r.year);
        content += '\t';
        content += r.indicator;
        content += '\t';
        content += std::isnan(r.value) ? std::string("NA") : textio::format_double(r.value);
        content += '\n';
    }
    write_atomically(fs::path(dir_) / "points" / (point_id + ".tsv"), content);
    std::error_code ignored;
    fs::remove(fs::path(dir_) / "failed" / (point_id + ".txt"), ignored);
}

void ResultStore::write_failure(const std::string& point_id, const std::string& message) const {
    write_atomically(fs::path(dir_) / "failed" / (point_id + ".txt"), message + "\n");
}

std::vector<OutputRecord> ResultStore::read_point(const std::string& point_id) const {
    const fs::path path = fs::path(dir_) / "points" / (point_id + ".tsv");
    std::ifstream in(path);
    if (!in) {
        throw LookupError("point " + point_id + " is not in store " + dir_);
    }
    std::vector<OutputRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = textio::split(line, '\t');
        if (f.size() != 5 || f[0] != point_id) {
            throw ConsistencyError("malformed record in " + path.string());
        }
        out.push_back(OutputRecord{f[1], static_cast<int>(textio::parse_int(f[2])), f[3], textio::parse_double(f[4])});
    }
    return out;
}

ExecutionSummary execute_grid(const std::vector<FactorPoint>& points, const Experiment& experiment, int jobs,
                              const ResultStore& store, const std::function<void(const ProgressEvent&)>& progress,
                              const std::atomic<bool>* stop) {
    ExecutionSummary summary;
    std::vector<const FactorPoint*> pending;
    std::mutex mutex;
    std::size_t finished = 0;
    for (const auto& p : points) {
        if (store.completed(p.id())) {
            ++summary.skipped;
            ++finished;
            if (progress) {
                progress(ProgressEvent{p.id(), "skipped", finished, points.size(), {}});
            }
        } else {
            pending.push_back(&p);
        }
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            if (stop != nullptr && stop->load()) {
                return;
            }
            const std::size_t k = next.fetch_add(1);
            if (k >= pending.size()) {
                return;
            }
            const FactorPoint& point = *pending[k];
            const std::string id = point.id();
            std::string message;
            bool ok = true;
            try {
                store.write_point(id, run_point(experiment, point));
            } catch (const std::exception& e) {
                ok = false;
                message = e.what();
                store.write_failure(id, message);
            }
            const std::lock_guard<std::mutex> lock(mutex);
            ++finished;
            ok ? ++summary.completed : ++summary.failed;
            if (progress) {
                progress(ProgressEvent{id, ok ? "done" : "failed", finished, points.size(), message});
            }
        }
    };
    const auto n_threads = static_cast<std::size_t>(std::max(1, jobs));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < std::min(n_threads, std::max<std::size_t>(pending.size(), 1)); ++t) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    return summary;
}

} // namespace microsa
