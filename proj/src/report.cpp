#include "phenosig/report.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace phenosig {

int cell_decimals(double v)
{
    const double a = std::fabs(v);
    if (a >= 1000.0) return 0;
    if (a >= 1.0) return 2;
    return 3;
}

std::string format_median_iqr(double median, double iqr)
{
    const int d = cell_decimals(median);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.*f (%.*f)", d, median, d, iqr);
    return buf;
}

std::string format_p(double p)
{
    if (std::isnan(p)) return "n/a";
    if (p < 0.001) return "<0.001";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", p);
    return buf;
}

std::string display_name(const std::string& feature)
{
    std::string out = feature;
    for (char& c : out)
        if (c == '_') c = ' ';
    return out;
}

std::string render_markdown(std::span<const TestResult> results, double alpha)
{
    std::string md;
    md += "# Group comparison\n\n";
    md += "Two-tailed Mann-Whitney U tests with Benjamini-Hochberg adjustment. ";
    md += "Cells show median (IQR). Bold rows are significant at alpha = " + format_p(alpha) + ".\n";
    for (Block block : {Block::awake, Block::asleep, Block::daily}) {
        bool header = false;
        for (const TestResult& t : results) {
            if (t.block != block) continue;
            if (!header) {
                md += "\n## " + std::string(to_string(block)) + "\n\n";
                md += "| feature | state | controls | patients | p raw | p adjusted | significant |\n";
                md += "|---|---|---|---|---|---|---|\n";
                header = true;
            }
            const std::string ctrl = t.n_control ? format_median_iqr(t.control_median, t.control_iqr) : "n/a";
            const std::string pat = t.n_patient ? format_median_iqr(t.patient_median, t.patient_iqr) : "n/a";
            const std::string b = t.significant ? "**" : "";
            md += "| " + b + display_name(t.feature) + b + " | " + std::string(to_string(t.block)) + " | " + b + ctrl +
                  b + " | " + b + pat + b + " | " + format_p(t.p_raw) + " | " + b + format_p(t.p_adjusted) + b +
                  " | " + (t.skipped ? "skipped" : (t.significant ? "yes" : "no")) + " |\n";
        }
    }
    return md;
}

std::string render_csv(std::span<const TestResult> results)
{
    std::string csv = "feature,state,control,patient,p_raw,p_adjusted,significant,n_control,n_patient,u_statistic\n";
    auto num = [](double v) { return std::isnan(v) ? std::string("NA") : format_double(v); };
    for (const TestResult& t : results) {
        csv += t.feature;
        csv += ',';
        csv += to_string(t.block);
        csv += ',';
        csv += t.n_control ? format_median_iqr(t.control_median, t.control_iqr) : "NA";
        csv += ',';
        csv += t.n_patient ? format_median_iqr(t.patient_median, t.patient_iqr) : "NA";
        csv += ',';
        csv += num(t.p_raw);
        csv += ',';
        csv += num(t.p_adjusted);
        csv += ',';
        csv += t.skipped ? "skipped" : (t.significant ? "true" : "false");
        csv += ',';
        csv += std::to_string(t.n_control);
        csv += ',';
        csv += std::to_string(t.n_patient);
        csv += ',';
        csv += t.skipped ? std::string("NA") : format_double(t.u_statistic);
        csv += '\n';
    }
    return csv;
}

std::string render_boxplot_json(std::span<const TestResult> results)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const TestResult& t : results) {
        for (Group g : {Group::control, Group::patient}) {
            const auto& values = g == Group::control ? t.control_values : t.patient_values;
            if (values.empty()) continue;
            const BoxplotStats b = boxplot_stats(values);
            arr.push_back({
                {"feature", t.feature},
                {"state", to_string(t.block)},
                {"group", to_string(g)},
                {"median", b.median},
                {"q1", b.q1},
                {"q3", b.q3},
                {"whisker_lo", b.whisker_lo},
                {"whisker_hi", b.whisker_hi},
                {"outliers", b.outliers},
            });
        }
    }
    return arr.dump(2) + "\n";
}

}  // namespace phenosig
