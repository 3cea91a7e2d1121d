#include "phenosig/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace phenosig {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok) throw ConfigError("config: " + what);
}

std::int64_t config_date(const json& j, const char* key, std::size_t index)
{
    const std::string where = "exclusions[" + std::to_string(index) + "]." + key;
    require(j.contains(key) && j.at(key).is_string(), where + " must be a YYYY-MM-DD string");
    try {
        return parse_iso_date(j.at(key).get<std::string>());
    } catch (const DomainError& e) {
        throw ConfigError("config: " + where + ": " + e.what());
    }
}

std::vector<fs::path> scan_data_dir(const fs::path& dir)
{
    require(fs::is_directory(dir), "data_dir " + dir.string() + " is not a directory");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

Config parse_config(const std::string& json_text, const fs::path& base_dir)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    require(j.is_object(), "top level must be an object");

    Config c;
    try {
        c.version = j.value("version", 0);
        require(c.version == 1, "unsupported or missing version (expected 1)");

        if (j.contains("subjects")) {
            for (const auto& s : j.at("subjects")) {
                fs::path p = s.get<std::string>();
                c.subjects.push_back(p.is_absolute() ? p : base_dir / p);
            }
        }
        if (j.contains("data_dir")) {
            fs::path d = j.at("data_dir").get<std::string>();
            for (auto& p : scan_data_dir(d.is_absolute() ? d : base_dir / d)) c.subjects.push_back(std::move(p));
        }

        if (j.contains("exclusions")) {
            std::size_t i = 0;
            for (const auto& e : j.at("exclusions")) {
                DateRange r{config_date(e, "start", i), config_date(e, "end", i)};
                require(r.last_day >= r.first_day, "exclusions[" + std::to_string(i) + "] ends before it starts");
                c.exclusions.push_back(r);
                ++i;
            }
        }

        if (j.contains("features")) {
            const json& f = j.at("features");
            FeatureParams& p = c.features;
            if (f.contains("sampen")) {
                p.sampen.m = f.at("sampen").value("m", p.sampen.m);
                p.sampen.r_factor = f.at("sampen").value("r_factor", p.sampen.r_factor);
            }
            if (f.contains("higuchi")) p.higuchi_kmax = f.at("higuchi").value("kmax", p.higuchi_kmax);
            if (f.contains("mfd")) p.mfd_max_scale = f.at("mfd").value("max_scale", p.mfd_max_scale);
            if (f.contains("lomb_scargle")) {
                const json& ls = f.at("lomb_scargle");
                p.lomb_scargle.f_min_hz = ls.value("f_min_hz", p.lomb_scargle.f_min_hz);
                p.lomb_scargle.f_max_hz = ls.value("f_max_hz", p.lomb_scargle.f_max_hz);
                p.lomb_scargle.oversampling = ls.value("oversampling", p.lomb_scargle.oversampling);
            }
            if (f.contains("rr_cleaning")) {
                const json& rc = f.at("rr_cleaning");
                p.rr_cleaning.min_rr_ms = rc.value("min_rr_ms", p.rr_cleaning.min_rr_ms);
                p.rr_cleaning.max_rr_ms = rc.value("max_rr_ms", p.rr_cleaning.max_rr_ms);
                p.rr_cleaning.max_fill_ms = rc.value("max_fill_ms", p.rr_cleaning.max_fill_ms);
            }
            p.min_rr_coverage = f.value("min_rr_coverage", p.min_rr_coverage);
            p.min_motion_fraction = f.value("min_motion_fraction", p.min_motion_fraction);
        }

        if (j.contains("aggregation")) {
            const json& a = j.at("aggregation");
            c.aggregation.std_ddof = a.value("std_ddof", c.aggregation.std_ddof);
            c.daily.min_recorded_hours = a.value("min_recorded_hours", c.daily.min_recorded_hours);
            c.daily.min_qualifying_days = a.value("min_qualifying_days", c.daily.min_qualifying_days);
        }

        if (j.contains("stats")) {
            const json& s = j.at("stats");
            c.comparison.alpha = s.value("alpha", c.comparison.alpha);
            const std::string fam = s.value("families", std::string("per_block"));
            require(fam == "per_block" || fam == "global", "stats.families must be per_block or global");
            c.comparison.families = fam == "global" ? FamilyScope::global : FamilyScope::per_block;
            if (s.contains("features")) {
                c.comparison.features.clear();
                for (const auto& name : s.at("features")) {
                    try {
                        c.comparison.features.push_back(parse_feature(name.get<std::string>()));
                    } catch (const DomainError& e) {
                        throw ConfigError(std::string("config: stats.features: ") + e.what());
                    }
                }
            }
            c.comparison.include_daily = s.value("include_daily", c.comparison.include_daily);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: wrong value type: ") + e.what());
    }

    const FeatureParams& p = c.features;
    require(p.sampen.m >= 1 && p.sampen.m <= 10, "features.sampen.m must be in [1, 10]");
    require(p.sampen.r_factor > 0.0, "features.sampen.r_factor must be > 0");
    require(p.higuchi_kmax >= 2, "features.higuchi.kmax must be >= 2");
    require(p.mfd_max_scale >= 2, "features.mfd.max_scale must be >= 2");
    require(p.lomb_scargle.f_min_hz > 0.0 && p.lomb_scargle.f_max_hz > p.lomb_scargle.f_min_hz,
            "features.lomb_scargle needs 0 < f_min_hz < f_max_hz");
    require(p.lomb_scargle.oversampling >= 1.0, "features.lomb_scargle.oversampling must be >= 1");
    require(p.rr_cleaning.min_rr_ms > 0.0 && p.rr_cleaning.max_rr_ms > p.rr_cleaning.min_rr_ms,
            "features.rr_cleaning needs 0 < min_rr_ms < max_rr_ms");
    require(p.rr_cleaning.max_fill_ms >= 0.0, "features.rr_cleaning.max_fill_ms must be >= 0");
    require(p.min_rr_coverage > 0.0 && p.min_rr_coverage <= 1.0, "features.min_rr_coverage must be in (0, 1]");
    require(p.min_motion_fraction > 0.0 && p.min_motion_fraction <= 1.0,
            "features.min_motion_fraction must be in (0, 1]");
    require(c.aggregation.std_ddof == 0 || c.aggregation.std_ddof == 1, "aggregation.std_ddof must be 0 or 1");
    require(c.daily.min_recorded_hours >= 0.0 && c.daily.min_recorded_hours <= 24.0,
            "aggregation.min_recorded_hours must be in [0, 24]");
    require(c.comparison.alpha > 0.0 && c.comparison.alpha < 1.0, "stats.alpha must be in (0, 1)");
    return c;
}

Config load_config(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), file.parent_path().empty() ? fs::path(".") : file.parent_path());
}

std::string extraction_fingerprint(const Config& c)
{
    const FeatureParams& p = c.features;
    json ex = json::array();
    for (const DateRange& r : c.exclusions) ex.push_back({r.first_day, r.last_day});
    const json j = {
        {"version", c.version},
        {"exclusions", ex},
        {"sampen", {p.sampen.m, format_double(p.sampen.r_factor)}},
        {"higuchi_kmax", p.higuchi_kmax},
        {"mfd_max_scale", p.mfd_max_scale},
        {"lomb_scargle",
         {format_double(p.lomb_scargle.f_min_hz), format_double(p.lomb_scargle.f_max_hz),
          format_double(p.lomb_scargle.oversampling)}},
        {"rr_cleaning",
         {format_double(p.rr_cleaning.min_rr_ms), format_double(p.rr_cleaning.max_rr_ms),
          format_double(p.rr_cleaning.max_fill_ms)}},
        {"min_rr_coverage", format_double(p.min_rr_coverage)},
        {"min_motion_fraction", format_double(p.min_motion_fraction)},
        {"std_ddof", c.aggregation.std_ddof},
        {"daily", {format_double(c.daily.min_recorded_hours), c.daily.min_qualifying_days}},
    };
    return j.dump();
}

std::vector<TimeRange> exclusion_ranges(const Config& config, UtcOffset tz)
{
    std::vector<TimeRange> out;
    for (const DateRange& r : config.exclusions) out.push_back(local_date_range(r.first_day, r.last_day, tz));
    return out;
}

}  // namespace phenosig
