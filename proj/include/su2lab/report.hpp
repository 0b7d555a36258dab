#pragma once

// Run reports: named pass/fail records with measured values and thresholds,
// a config echo, and CSV/JSON emission.  Reports are byte-stable for a
// fixed config and seed: the timestamp field stays empty unless a caller
// sets it, and every number is serialized deterministically.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace su2lab {

inline constexpr const char* kToolVersion = "0.1.0";

/// One measured check: an explicit pass/fail, the measured number, and the
/// threshold it was held against.
struct Record {
    std::string name;
    std::string status;  // "pass" or "fail"
    double value = 0.0;
    double threshold = 0.0;
    std::string units;
};

[[nodiscard]] inline Record make_record(std::string name, bool pass, double value,
                                        double threshold, std::string units) {
    return Record{std::move(name), pass ? "pass" : "fail", value, threshold,
                  std::move(units)};
}

/// A full run report: version, optional timestamp (left empty by default so
/// identical runs produce identical bytes), the effective config, and the
/// records.
struct Report {
    std::string version = kToolVersion;
    std::string timestamp;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<Record> records;

    [[nodiscard]] bool all_pass() const {
        for (const Record& r : records)
            if (r.status != "pass") return false;
        return true;
    }
};

/// Records as CSV rows name,status,value,threshold,units.
inline void write_records_csv(std::ostream& os, const Report& report) {
    os << "name,status,value,threshold,units\n";
    char line[256];
    for (const Record& r : report.records) {
        std::snprintf(line, sizeof line, "%s,%s,%.17g,%.17g,%s\n", r.name.c_str(),
                      r.status.c_str(), r.value, r.threshold, r.units.c_str());
        os << line;
    }
}

/// Report as JSON: {version, config, records[{name, status, value,
/// threshold, units}]}; non-finite numbers serialize as null.
inline void write_report_json(std::ostream& os, const Report& report) {
    nlohmann::ordered_json j;
    j["version"] = report.version;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.config) cfg[k] = v;
    j["config"] = std::move(cfg);
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const Record& r : report.records) {
        nlohmann::ordered_json item;
        item["name"] = r.name;
        item["status"] = r.status;
        item["value"] = r.value;
        item["threshold"] = r.threshold;
        item["units"] = r.units;
        records.push_back(std::move(item));
    }
    j["records"] = std::move(records);
    os << j.dump(2) << '\n';
}

}  // namespace su2lab
