#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbsp {

// Raised on malformed input files; the message carries the file path and,
// where known, the 1-based line number.
class parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Daily activity panel over days 1..d.  Each user carries a sorted,
// duplicate-free list of the days they were active on.
struct ActivityMatrix {
    struct UserActivity {
        std::string user_id;
        std::vector<long long> active_days;
    };

    long long d = 0;
    std::vector<UserActivity> users;

    long long n_users() const { return static_cast<long long>(users.size()); }
};

// First-activity records: one row per user, the day they first appeared.
struct TriggerData {
    struct Trigger {
        std::string user_id;
        long long first_day;
    };

    long long d = 0;
    std::vector<Trigger> triggers;

    long long n_users() const { return static_cast<long long>(triggers.size()); }
};

enum class ModelKind { bernoulli, geometric };

// Per-user reductions that the marginal likelihoods depend on:
//   bernoulli - counts[i] = number of active days M_i in 1..d,
//   geometric - counts[i] = first activity day Y_i in 1..d.
struct SufficientStats {
    ModelKind kind = ModelKind::bernoulli;
    long long d = 0;
    std::vector<long long> counts;

    long long n_users() const { return static_cast<long long>(counts.size()); }

    // histogram()[v] = number of users with count v, for v in 0..d.
    std::vector<long long> histogram() const;

    // Throws std::invalid_argument when any count falls outside 1..d or the
    // shape is otherwise inconsistent (d = 0 is allowed only when empty).
    void validate() const;
};

// CSV ingestion.  Activity files have header "user_id,day", trigger files
// "user_id,first_day"; both accept LF or CRLF line endings.  The observation
// window d defaults to the maximum day present; pass d_override to extend or
// pin it (required for files with no data rows).  Duplicate (user, day)
// activity rows are collapsed; duplicate users in a trigger file are an
// error, as is any day outside 1..d.
ActivityMatrix ingest_activity_csv(const std::filesystem::path& path,
                                   std::optional<long long> d_override = std::nullopt);
TriggerData ingest_trigger_csv(const std::filesystem::path& path,
                               std::optional<long long> d_override = std::nullopt);

void emit_activity_csv(const ActivityMatrix& data, std::ostream& out);
void emit_trigger_csv(const TriggerData& data, std::ostream& out);
void emit_activity_csv(const ActivityMatrix& data, const std::filesystem::path& path);
void emit_trigger_csv(const TriggerData& data, const std::filesystem::path& path);

// Sufficient-statistic reductions.  An ActivityMatrix reduces to Bernoulli
// counts by default; to_stats_geometric takes each user's earliest active day
// instead, which is the correct reduction when only first appearances carry
// signal.
SufficientStats to_stats(const ActivityMatrix& data);
SufficientStats to_stats(const TriggerData& data);
SufficientStats to_stats_geometric(const ActivityMatrix& data);

}  // namespace sbsp
