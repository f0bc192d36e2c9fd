#include "sbsp/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sbsp {

namespace {

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

// Splits "a,b" into exactly two fields; anything else is malformed.
std::pair<std::string, std::string> split2(const std::string& line,
                                           const std::filesystem::path& path,
                                           long long line_no) {
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
        throw parse_error(path.string() + ":" + std::to_string(line_no) +
                          ": expected exactly two comma-separated fields");
    }
    return {line.substr(0, comma), line.substr(comma + 1)};
}

long long parse_day(const std::string& field, const std::filesystem::path& path,
                    long long line_no) {
    long long value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw parse_error(path.string() + ":" + std::to_string(line_no) +
                          ": day field is not an integer: '" + field + "'");
    }
    return value;
}

std::ifstream open_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw parse_error("cannot open input file: " + path.string());
    }
    return in;
}

void check_header(std::ifstream& in, const std::string& expected,
                  const std::filesystem::path& path) {
    std::string header;
    if (!std::getline(in, header)) {
        throw parse_error(path.string() + ": empty file, expected header '" + expected + "'");
    }
    if (strip_cr(header) != expected) {
        throw parse_error(path.string() + ":1: expected header '" + expected + "', got '" +
                          strip_cr(header) + "'");
    }
}

long long resolve_window(long long max_day, bool any_rows,
                         std::optional<long long> d_override,
                         const std::filesystem::path& path) {
    if (d_override) {
        if (*d_override < 1) {
            throw parse_error(path.string() + ": observation window d must be >= 1");
        }
        if (any_rows && max_day > *d_override) {
            throw parse_error(path.string() + ": day " + std::to_string(max_day) +
                              " exceeds the requested window d=" + std::to_string(*d_override));
        }
        return *d_override;
    }
    if (!any_rows) {
        throw parse_error(path.string() +
                          ": no data rows; the observation window d must be given explicitly");
    }
    return max_day;
}

}  // namespace

ActivityMatrix ingest_activity_csv(const std::filesystem::path& path,
                                   std::optional<long long> d_override) {
    auto in = open_csv(path);
    check_header(in, "user_id,day", path);

    // Preserve first-appearance order of users; dedupe (user, day) pairs.
    std::vector<ActivityMatrix::UserActivity> users;
    std::map<std::string, std::size_t> index;
    long long max_day = 0;
    bool any = false;

    std::string line;
    long long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto [uid, day_field] = split2(line, path, line_no);
        if (uid.empty()) {
            throw parse_error(path.string() + ":" + std::to_string(line_no) +
                              ": empty user_id");
        }
        const long long day = parse_day(day_field, path, line_no);
        if (day < 1) {
            throw parse_error(path.string() + ":" + std::to_string(line_no) +
                              ": day must be >= 1, got " + std::to_string(day));
        }
        auto [it, fresh] = index.try_emplace(uid, users.size());
        if (fresh) users.push_back({uid, {}});
        users[it->second].active_days.push_back(day);
        max_day = std::max(max_day, day);
        any = true;
    }

    ActivityMatrix out;
    out.d = resolve_window(max_day, any, d_override, path);
    for (auto& u : users) {
        std::sort(u.active_days.begin(), u.active_days.end());
        u.active_days.erase(std::unique(u.active_days.begin(), u.active_days.end()),
                            u.active_days.end());
    }
    out.users = std::move(users);
    return out;
}

TriggerData ingest_trigger_csv(const std::filesystem::path& path,
                               std::optional<long long> d_override) {
    auto in = open_csv(path);
    check_header(in, "user_id,first_day", path);

    TriggerData out;
    std::set<std::string> seen;
    long long max_day = 0;
    bool any = false;

    std::string line;
    long long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto [uid, day_field] = split2(line, path, line_no);
        if (uid.empty()) {
            throw parse_error(path.string() + ":" + std::to_string(line_no) +
                              ": empty user_id");
        }
        if (!seen.insert(uid).second) {
            throw parse_error(path.string() + ":" + std::to_string(line_no) +
                              ": duplicate user_id '" + uid + "' in trigger file");
        }
        const long long day = parse_day(day_field, path, line_no);
        if (day < 1) {
            throw parse_error(path.string() + ":" + std::to_string(line_no) +
                              ": first_day must be >= 1, got " + std::to_string(day));
        }
        out.triggers.push_back({uid, day});
        max_day = std::max(max_day, day);
        any = true;
    }

    out.d = resolve_window(max_day, any, d_override, path);
    return out;
}

void emit_activity_csv(const ActivityMatrix& data, std::ostream& out) {
    out << "user_id,day\n";
    for (const auto& u : data.users) {
        for (long long day : u.active_days) {
            out << u.user_id << ',' << day << '\n';
        }
    }
}

void emit_trigger_csv(const TriggerData& data, std::ostream& out) {
    out << "user_id,first_day\n";
    for (const auto& t : data.triggers) {
        out << t.user_id << ',' << t.first_day << '\n';
    }
}

void emit_activity_csv(const ActivityMatrix& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot open output file: " + path.string());
    emit_activity_csv(data, out);
}

void emit_trigger_csv(const TriggerData& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot open output file: " + path.string());
    emit_trigger_csv(data, out);
}

std::vector<long long> SufficientStats::histogram() const {
    std::vector<long long> h(static_cast<std::size_t>(d) + 1, 0);
    for (long long v : counts) {
        h[static_cast<std::size_t>(v)] += 1;
    }
    return h;
}

void SufficientStats::validate() const {
    if (d < 0) throw std::invalid_argument("SufficientStats: d must be >= 0");
    if (d == 0 && !counts.empty()) {
        throw std::invalid_argument("SufficientStats: d = 0 requires an empty sample");
    }
    for (long long v : counts) {
        if (v < 1 || v > d) {
            throw std::invalid_argument("SufficientStats: count " + std::to_string(v) +
                                        " outside 1.." + std::to_string(d));
        }
    }
}

SufficientStats to_stats(const ActivityMatrix& data) {
    SufficientStats s;
    s.kind = ModelKind::bernoulli;
    s.d = data.d;
    s.counts.reserve(data.users.size());
    for (const auto& u : data.users) {
        if (u.active_days.empty()) {
            throw std::invalid_argument("to_stats: user '" + u.user_id + "' has no active days");
        }
        s.counts.push_back(static_cast<long long>(u.active_days.size()));
    }
    s.validate();
    return s;
}

SufficientStats to_stats(const TriggerData& data) {
    SufficientStats s;
    s.kind = ModelKind::geometric;
    s.d = data.d;
    s.counts.reserve(data.triggers.size());
    for (const auto& t : data.triggers) {
        s.counts.push_back(t.first_day);
    }
    s.validate();
    return s;
}

SufficientStats to_stats_geometric(const ActivityMatrix& data) {
    SufficientStats s;
    s.kind = ModelKind::geometric;
    s.d = data.d;
    s.counts.reserve(data.users.size());
    for (const auto& u : data.users) {
        if (u.active_days.empty()) {
            throw std::invalid_argument("to_stats_geometric: user '" + u.user_id +
                                        "' has no active days");
        }
        s.counts.push_back(u.active_days.front());
    }
    s.validate();
    return s;
}

}  // namespace sbsp
