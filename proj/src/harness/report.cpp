#include "embedhalluc/harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "embedhalluc/errors.hpp"

namespace embedhalluc::harness {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return kNaN;
    return j.at(key).get<double>();
}

std::string exact(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_number(const std::string& text) {
    if (text.empty()) return kNaN;
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw DataError("bad number '" + text + "' in report");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void require_seeds(const RunReport& report) {
    if (report.seeds.empty()) throw DataError("report has no seeds");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

const char* kCsvHeader = "seed,status,test_score,std,validation_score,selected_step,best_lr,best_batch";

}  // namespace

std::string to_string(ReportFormat format) {
    switch (format) {
        case ReportFormat::json: return "json";
        case ReportFormat::csv: return "csv";
        case ReportFormat::table: return "table";
    }
    return "?";
}

ReportFormat parse_report_format(const std::string& text) {
    if (text == "json") return ReportFormat::json;
    if (text == "csv") return ReportFormat::csv;
    if (text == "table") return ReportFormat::table;
    throw ConfigError("unknown report format '" + text + "'");
}

std::string format_mean_std(double mean, double std) {
    if (!std::isfinite(mean)) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f (%.1f)", mean * 100.0, std * 100.0);
    return buf;
}

std::string report_to_json(const RunReport& report) {
    require_seeds(report);
    json j;
    j["task"] = report.task;
    j["method"] = report.method;
    j["metric"] = report.metric;
    j["std_convention"] = report.std_convention;
    j["mean"] = number(report.mean);
    j["std"] = number(report.std);
    j["succeeded"] = report.succeeded;
    j["failed_seeds"] = report.failed_seeds;
    j["seeds"] = json::array();
    for (const auto& s : report.seeds) {
        json e;
        e["seed"] = s.seed;
        e["ok"] = s.ok;
        if (!s.ok) e["error"] = s.error;
        e["test_score"] = number(s.test_score);
        e["validation_score"] = number(s.validation_score);
        e["selected_step"] = s.selected_step;
        if (s.best_cell) e["best_cell"] = {{"lr", s.best_cell->lr}, {"batch", s.best_cell->batch}};
        e["grid"] = json::array();
        for (const auto& c : s.grid) {
            e["grid"].push_back({{"lr", c.cell.lr},
                                 {"batch", c.cell.batch},
                                 {"validation_score", number(c.outcome.validation_score)},
                                 {"selected_step", c.outcome.selected_step}});
        }
        e["phase_seconds"] = json::object();
        for (const auto& [k, v] : s.phase_seconds) e["phase_seconds"][k] = number(v);
        e["diagnostics"] = json::object();
        for (const auto& [k, v] : s.diagnostics) e["diagnostics"][k] = number(v);
        j["seeds"].push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed JSON report: ") + e.what());
    }
    try {
        RunReport r;
        r.task = j.at("task").get<std::string>();
        r.method = j.at("method").get<std::string>();
        r.metric = j.at("metric").get<std::string>();
        r.std_convention = j.value("std_convention", std::string("population"));
        for (const auto& e : j.at("seeds")) {
            SeedReport s;
            s.seed = e.at("seed").get<std::uint64_t>();
            s.ok = e.at("ok").get<bool>();
            s.error = e.value("error", std::string());
            s.test_score = number_or_nan(e, "test_score");
            s.validation_score = number_or_nan(e, "validation_score");
            s.selected_step = e.value("selected_step", std::size_t{0});
            if (e.contains("best_cell"))
                s.best_cell = GridCell{e["best_cell"].at("lr").get<double>(), e["best_cell"].at("batch").get<std::size_t>()};
            if (e.contains("grid")) {
                for (const auto& c : e["grid"]) {
                    s.grid.push_back({{c.at("lr").get<double>(), c.at("batch").get<std::size_t>()},
                                      {number_or_nan(c, "validation_score"), c.value("selected_step", std::size_t{0})}});
                }
            }
            if (e.contains("phase_seconds"))
                for (const auto& [k, v] : e["phase_seconds"].items()) s.phase_seconds[k] = v.is_null() ? kNaN : v.get<double>();
            if (e.contains("diagnostics"))
                for (const auto& [k, v] : e["diagnostics"].items()) s.diagnostics[k] = v.is_null() ? kNaN : v.get<double>();
            r.seeds.push_back(std::move(s));
        }
        require_seeds(r);
        r.aggregate();
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("JSON report is missing fields: ") + e.what());
    }
}

std::string report_to_csv(const RunReport& report) {
    require_seeds(report);
    std::ostringstream out;
    out << "# task=" << report.task << " method=" << report.method << " metric=" << report.metric
        << " std=" << report.std_convention << "\n";
    out << kCsvHeader << "\n";
    for (const auto& s : report.seeds) {
        out << s.seed << ',' << (s.ok ? "ok" : "failed") << ',' << exact(s.ok ? s.test_score : kNaN) << ",,"
            << exact(s.ok ? s.validation_score : kNaN) << ',' << (s.ok ? std::to_string(s.selected_step) : "") << ','
            << (s.best_cell ? exact(s.best_cell->lr) : "") << ','
            << (s.best_cell ? std::to_string(s.best_cell->batch) : "") << "\n";
    }
    out << "aggregate," << report.succeeded << '/' << report.seeds.size() << ',' << exact(report.mean) << ','
        << exact(report.std) << ",,,,\n";
    return out.str();
}

RunReport report_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    RunReport r;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            std::istringstream meta(line.substr(2));
            std::string kv;
            while (meta >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = kv.substr(0, eq);
                const std::string value = kv.substr(eq + 1);
                if (key == "task") r.task = value;
                if (key == "method") r.method = value;
                if (key == "metric") r.metric = value;
                if (key == "std") r.std_convention = value;
            }
            continue;
        }
        if (!header_seen) {
            if (line != kCsvHeader) throw ParseError("unexpected CSV header", line_no);
            header_seen = true;
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 8) throw ParseError("expected 8 CSV fields", line_no);
        if (f[0] == "aggregate") continue;
        try {
            SeedReport s;
            s.seed = std::stoull(f[0]);
            s.ok = f[1] == "ok";
            s.test_score = parse_number(f[2]);
            s.validation_score = parse_number(f[4]);
            s.selected_step = f[5].empty() ? 0 : std::stoull(f[5]);
            if (!f[6].empty()) s.best_cell = GridCell{parse_number(f[6]), static_cast<std::size_t>(std::stoull(f[7]))};
            r.seeds.push_back(std::move(s));
        } catch (const std::logic_error&) {
            throw ParseError("bad CSV row", line_no);
        }
    }
    require_seeds(r);
    r.aggregate();
    return r;
}

std::string render_table(const std::vector<RunReport>& reports) {
    if (reports.empty()) throw DataError("no reports to tabulate");
    std::vector<std::string> methods;
    std::vector<std::string> tasks;
    std::map<std::pair<std::string, std::string>, std::string> cells;
    for (const auto& r : reports) {
        require_seeds(r);
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
        const std::string col = r.task + " (" + r.metric + ")";
        if (std::find(tasks.begin(), tasks.end(), col) == tasks.end()) tasks.push_back(col);
        std::string cell = format_mean_std(r.mean, r.std);
        if (!r.failed_seeds.empty()) cell += " [" + std::to_string(r.failed_seeds.size()) + " failed]";
        cells[{r.method, col}] = cell;
    }
    std::vector<std::size_t> width(tasks.size() + 1, 6);
    for (const auto& m : methods) width[0] = std::max(width[0], m.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        width[t + 1] = std::max(width[t + 1], tasks[t].size());
        for (const auto& m : methods) {
            auto it = cells.find({m, tasks[t]});
            if (it != cells.end()) width[t + 1] = std::max(width[t + 1], it->second.size());
        }
    }
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
    std::ostringstream out;
    out << pad("method", width[0]);
    for (std::size_t t = 0; t < tasks.size(); ++t) out << "  " << pad(tasks[t], width[t + 1]);
    out << "\n";
    for (const auto& m : methods) {
        out << pad(m, width[0]);
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            auto it = cells.find({m, tasks[t]});
            out << "  " << pad(it == cells.end() ? "-" : it->second, width[t + 1]);
        }
        out << "\n";
    }
    return out.str();
}

void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path) {
    require_seeds(report);
    switch (format) {
        case ReportFormat::json: write_file(path, report_to_json(report)); break;
        case ReportFormat::csv: write_file(path, report_to_csv(report)); break;
        case ReportFormat::table: write_file(path, render_table({report})); break;
    }
}

void emit_table(const std::vector<RunReport>& reports, const std::filesystem::path& path) {
    write_file(path, render_table(reports));
}

RunReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".csv") return report_from_csv(buf.str());
    return report_from_json(buf.str());
}

}  // namespace embedhalluc::harness
