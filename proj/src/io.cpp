#include "bmsprt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "bmsprt/errors.hpp"

namespace bmsprt {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) return out;
        start = comma + 1;
    }
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
    const char* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, out);
    return ec == std::errc() && ptr == end;
}

nlohmann::json optional_number(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

nlohmann::json finite_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

}  // namespace

std::vector<SessionRecord> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw MissingHeader("empty input: expected header '" + std::string(kCsvHeader) + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw MissingHeader("expected header '" + std::string(kCsvHeader) + "', got '" + line + "'");

    std::vector<SessionRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 4) throw MalformedRow(lineno, "expected 4 fields, got " + std::to_string(fields.size()));
        SessionRecord r;
        if (!parse_number(fields[0], r.timestamp)) throw MalformedRow(lineno, "bad timestamp");
        if (!parse_number(fields[1], r.queries)) throw MalformedRow(lineno, "bad query count");
        if (!parse_number(fields[2], r.successful_queries)) throw MalformedRow(lineno, "bad successful query count");
        if (!parse_number(fields[3], r.revenue)) throw MalformedRow(lineno, "bad revenue");
        if (r.successful_queries > r.queries) throw MalformedRow(lineno, "successful_queries exceeds queries");
        if (!std::isfinite(r.revenue) || r.revenue < 0.0) throw MalformedRow(lineno, "revenue must be nonnegative");
        records.push_back(r);
    }
    return records;
}

std::vector<SessionRecord> parse_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_csv(in);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string sessions_csv(std::span<const SessionRecord> records) {
    std::string out = std::string(kCsvHeader) + "\n";
    out.reserve(records.size() * 24);
    for (const auto& r : records) {
        out += std::to_string(r.timestamp);
        out += ',';
        out += std::to_string(r.queries);
        out += ',';
        out += std::to_string(r.successful_queries);
        out += ',';
        out += format_double(r.revenue);
        out += '\n';
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw DataError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

nlohmann::json to_json(const UpdateRecord& rec) {
    nlohmann::json j;
    j["block_index"] = rec.block_index;
    j["theta_hat"] = optional_number(rec.theta_hat);
    j["sigma"] = optional_number(rec.sigma);
    j["log_L"] = finite_or_null(rec.log_L);
    j["p_value"] = rec.p_value;
    j["decision"] = to_string(rec.decision);
    return j;
}

nlohmann::json to_json(const AbUpdateRecord& rec) {
    nlohmann::json j = to_json(rec.update);
    j["metric_a"] = optional_number(rec.metric_a);
    j["metric_b"] = optional_number(rec.metric_b);
    j["offset"] = rec.offset;
    return j;
}

std::string qq_csv(std::span<const QqPoint> points) {
    std::string out = "uniform_q,empirical_q\n";
    for (const auto& p : points) out += format_double(p.uniform_q) + "," + format_double(p.empirical_q) + "\n";
    return out;
}

std::string power_csv(std::span<const PowerPoint> points) {
    std::string out = "offset,rejection_rate,n_trials\n";
    for (const auto& p : points) {
        out += format_double(p.offset) + "," + format_double(p.rejection_rate) + "," + std::to_string(p.n_trials) + "\n";
    }
    return out;
}

std::string duration_csv(std::span<const PowerPoint> points) {
    std::string out = "offset,avg_duration\n";
    for (const auto& p : points) out += format_double(p.offset) + "," + format_double(p.avg_duration) + "\n";
    return out;
}

std::string trials_csv(std::span<const TrialResult> trials) {
    std::string out = "trial_id,final_p,rejected,samples_consumed,offset\n";
    for (const auto& t : trials) {
        out += std::to_string(t.trial_id) + "," + format_double(t.final_p) + "," + (t.rejected ? "1" : "0") + "," +
               std::to_string(t.samples_consumed) + "," + format_double(t.offset) + "\n";
    }
    return out;
}

}  // namespace bmsprt
