#include "dispo/run_store.hpp"

#include <sstream>

#include "dispo/errors.hpp"

namespace dispo {

namespace {

nlohmann::json header_for(const ConstraintPool& pool) {
    return {{"schema", kRunLogSchema}, {"version", kRunLogVersion}, {"pool", pool_to_json(pool)}};
}

std::string status_name(RunStatus s) { return s == RunStatus::valid ? "valid" : "invalid"; }

template <typename T>
std::optional<T> optional_field(const nlohmann::json& doc, const char* key) {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    return doc.at(key).get<T>();
}

}  // namespace

CellKey CellKey::parse(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw ConfigError("cell key must look like <model>:<instruction>, got '" + text + "'");
    }
    return {text.substr(0, colon), text.substr(colon + 1)};
}

nlohmann::json run_record_to_json(const RunRecord& r) {
    nlohmann::json doc = {{"run_id", r.run_id},
                          {"model", r.cell.model},
                          {"instruction", r.cell.instruction},
                          {"replication", r.replication},
                          {"attempt", r.attempt},
                          {"permutation_seed", r.permutation_seed},
                          {"status", status_name(r.status)},
                          {"selected", r.selected},
                          {"justifications", r.justifications},
                          {"compatibility", r.compatibility},
                          {"raw_payload", r.raw_payload},
                          {"provider", r.provider}};
    if (!r.error.empty()) doc["error"] = r.error;
    if (r.supersedes) doc["supersedes"] = *r.supersedes;
    if (r.started_at) doc["started_at"] = *r.started_at;
    if (r.finished_at) doc["finished_at"] = *r.finished_at;
    return doc;
}

RunRecord run_record_from_json(const nlohmann::json& doc) {
    RunRecord r;
    try {
        r.run_id = doc.at("run_id").get<std::string>();
        r.cell = {doc.at("model").get<std::string>(), doc.at("instruction").get<std::string>()};
        r.replication = doc.at("replication").get<int>();
        r.attempt = doc.value("attempt", 0);
        r.permutation_seed = doc.at("permutation_seed").get<std::uint64_t>();
        const auto status = doc.at("status").get<std::string>();
        if (status == "valid") {
            r.status = RunStatus::valid;
        } else if (status == "invalid") {
            r.status = RunStatus::invalid;
        } else {
            throw ParseError("run record " + r.run_id + ": unknown status '" + status + "'");
        }
        r.selected = doc.at("selected").get<std::vector<int>>();
        r.justifications = doc.value("justifications", std::vector<std::string>{});
        r.compatibility = doc.value("compatibility", std::string{});
        r.raw_payload = doc.value("raw_payload", std::string{});
        r.error = doc.value("error", std::string{});
        r.supersedes = optional_field<std::string>(doc, "supersedes");
        r.started_at = optional_field<std::string>(doc, "started_at");
        r.finished_at = optional_field<std::string>(doc, "finished_at");
        r.provider = doc.value("provider", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("run record: ") + e.what());
    }
    return r;
}

RunStore RunStore::open(const std::filesystem::path& path, const ConstraintPool& pool) {
    RunStore store;
    store.path_ = path;
    store.mutex_ = std::make_unique<std::mutex>();
    std::error_code ec;
    const bool exists = std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) > 0;
    if (exists) {
        store.load();
        if (!(store.pool_ == pool)) {
            throw ConfigError("store " + path.string() + " was created with a different constraint pool");
        }
    } else {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw ConfigError("cannot create store " + path.string());
        out << header_for(pool).dump() << '\n';
        out.flush();
        if (!out) throw ConfigError("cannot write store header " + path.string());
        store.pool_ = pool;
    }
    store.out_ = std::make_unique<std::ofstream>(path, std::ios::app);
    if (!*store.out_) throw ConfigError("cannot open store for append " + path.string());
    return store;
}

RunStore RunStore::open_existing(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0) {
        throw DataError("store " + path.string() + " does not exist or is empty");
    }
    RunStore store;
    store.path_ = path;
    store.mutex_ = std::make_unique<std::mutex>();
    store.load();
    store.out_ = std::make_unique<std::ofstream>(path, std::ios::app);
    return store;
}

void RunStore::load() {
    std::string content;
    {
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw DataError("cannot read store " + path_.string());
        std::ostringstream buffer;
        buffer << in.rdbuf();
        content = buffer.str();
    }

    const auto complete = content.rfind('\n');
    if (complete == std::string::npos) throw ParseError("store " + path_.string() + " has no complete header line");
    if (complete + 1 != content.size()) {
        // Torn trailing record from an interrupted append.
        std::filesystem::resize_file(path_, complete + 1);
        content.resize(complete + 1);
    }

    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < content.size()) {
        const auto end = content.find('\n', start);
        const std::string_view line(content.data() + start, end - start);
        start = end + 1;
        ++line_no;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("store " + path_.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
        if (line_no == 1) {
            if (doc.value("schema", std::string{}) != kRunLogSchema) {
                throw ParseError("store " + path_.string() + " is not a run log");
            }
            if (doc.value("version", 0) != kRunLogVersion) {
                throw ParseError("store " + path_.string() + " has unsupported version " +
                                 std::to_string(doc.value("version", 0)));
            }
            pool_ = pool_from_json(doc.at("pool"));
            continue;
        }
        index(run_record_from_json(doc));
        ++lines_;
    }
}

void RunStore::index(RunRecord record) {
    auto& slot = current_[record.cell];
    const int replication = record.replication;
    slot.insert_or_assign(replication, std::move(record));
}

void RunStore::append(const RunRecord& record) {
    const auto line = run_record_to_json(record).dump() + "\n";
    std::lock_guard lock(*mutex_);
    out_->write(line.data(), static_cast<std::streamsize>(line.size()));
    out_->flush();
    if (!*out_) throw Error("write to store " + path_.string() + " failed");
    index(record);
    ++lines_;
}

void RunStore::invalidate(const CellKey& cell, int replication, const std::string& reason) {
    const RunRecord* prior = latest(cell, replication);
    if (prior == nullptr) {
        throw DataError("no record at " + cell.str() + " replication " + std::to_string(replication));
    }
    RunRecord record = *prior;
    record.run_id = prior->run_id + "-x" + std::to_string(lines_);
    record.status = RunStatus::invalid;
    record.error = reason;
    record.supersedes = prior->run_id;
    append(record);
}

bool RunStore::has(const CellKey& cell, int replication) const { return latest(cell, replication) != nullptr; }

const RunRecord* RunStore::latest(const CellKey& cell, int replication) const {
    const auto it = current_.find(cell);
    if (it == current_.end()) return nullptr;
    const auto rec = it->second.find(replication);
    return rec == it->second.end() ? nullptr : &rec->second;
}

std::vector<CellKey> RunStore::cells() const {
    std::vector<CellKey> out;
    for (const auto& [cell, _] : current_) out.push_back(cell);
    return out;
}

bool RunStore::empty() const { return current_.empty(); }

std::size_t RunStore::record_count() const { return lines_; }

std::vector<RunRecord> RunStore::load_cell(const CellKey& cell) const {
    const auto it = current_.find(cell);
    if (it == current_.end()) throw DataError("unknown cell " + cell.str());
    std::vector<RunRecord> out;
    for (const auto& [_, record] : it->second) {
        if (record.status == RunStatus::valid) out.push_back(record);
    }
    return out;
}

std::size_t RunStore::excluded_count(const CellKey& cell) const {
    const auto it = current_.find(cell);
    if (it == current_.end()) return 0;
    std::size_t n = 0;
    for (const auto& [_, record] : it->second) n += record.status == RunStatus::invalid ? 1 : 0;
    return n;
}

}  // namespace dispo
