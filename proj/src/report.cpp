#include "adbench/error.hpp"
#include "adbench/stats.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace adbench {

namespace {

using nlohmann::ordered_json;

std::string fixed6(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string cell_text(const std::optional<double>& v) { return v ? fixed6(*v) : "-"; }

ordered_json json_number(double v) {
    if (std::isnan(v)) return "nan";
    return v;
}

ordered_json json_cell(const std::optional<double>& v) { return v ? json_number(*v) : ordered_json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ExecutionError("cannot write " + path.string());
    out << text;
    if (!out) throw ExecutionError("write failed for " + path.string());
}

std::string row_label(std::size_t row) { return row == 0 ? "General Average" : std::to_string(row - 1); }

}  // namespace

ReportSummary write_report(std::span<const ScoreRecord> records, const std::filesystem::path& out_dir,
                           const ReportOptions& options) {
    std::filesystem::create_directories(out_dir);
    ReportSummary summary;
    ordered_json doc;
    doc["options"] = {{"pi_variant", options.pi_variant == PiVariant::With ? "with" : "without"},
                      {"general_average", options.general_average == GeneralAverage::MeanOfCategoryMeans
                                              ? "mean_of_category_means"
                                              : "mean_of_experiments"},
                      {"test", options.paired ? "paired" : "welch"}};
    doc["averages"] = ordered_json::array();

    for (auto model : kAllLearners) {
        for (auto base : {BaseKind::ProductBased, BaseKind::UserBased}) {
            const AverageTable t = average_table(records, model, base, options);
            std::string text = "behavior\tcategory";
            for (auto fs : kAllFeatureSets) text.append("\t").append(feature_set_code(fs));
            text.append("\ttotal_average\n");
            ordered_json jt = {{"model", learner_code(model)}, {"base", base_kind_code(base)}};
            jt["columns"] = ordered_json::array();
            for (auto fs : kAllFeatureSets) jt["columns"].push_back(feature_set_label(fs));
            jt["columns"].push_back("Total Average");
            jt["rows"] = ordered_json::array();

            for (auto behavior : {Behavior::ActualPurchase, Behavior::PurchaseIntention}) {
                const auto& rows = t.cells[static_cast<std::size_t>(behavior)];
                for (std::size_t r = 0; r < rows.size(); ++r) {
                    const bool any = std::any_of(rows[r].begin(), rows[r].end(), [](const auto& v) { return v; });
                    for (std::size_t col = 0; col < 5; ++col) {
                        if (!rows[r][col]) {
                            summary.gaps.push_back({"missing average " + std::string(learner_code(model)) + "/" +
                                                    std::string(base_kind_code(base)) + "/" +
                                                    std::string(behavior_code(behavior)) + "/" + row_label(r) + "/" +
                                                    std::string(feature_set_code(kAllFeatureSets[col]))});
                        }
                    }
                    if (!any) continue;  // absent row
                    text.append(behavior_code(behavior)).append("\t").append(row_label(r));
                    ordered_json jr = {{"behavior", behavior_code(behavior)}, {"row", row_label(r)}};
                    jr["cells"] = ordered_json::array();
                    for (const auto& v : rows[r]) {
                        text.append("\t").append(cell_text(v));
                        jr["cells"].push_back(json_cell(v));
                    }
                    text.push_back('\n');
                    jt["rows"].push_back(std::move(jr));
                }
            }
            if (std::any_of(t.both_targets.begin(), t.both_targets.end(), [](const auto& v) { return v; })) {
                text.append("Both\tTotal Average");
                ordered_json jr = {{"behavior", "Both"}, {"row", "Total Average"}};
                jr["cells"] = ordered_json::array();
                for (const auto& v : t.both_targets) {
                    text.append("\t").append(cell_text(v));
                    jr["cells"].push_back(json_cell(v));
                }
                text.push_back('\n');
                jt["rows"].push_back(std::move(jr));
            }
            const auto path = out_dir / ("averages_" + std::string(learner_code(model)) + "_" +
                                         std::string(base_kind_code(base)) + ".tsv");
            write_text(path, text);
            summary.files.push_back(path);
            doc["averages"].push_back(std::move(jt));
        }
    }

    const HypothesisSuite suite = hypothesis_suite(records, options);
    for (const auto& g : suite.gaps) summary.gaps.push_back(g);
    doc["hypotheses"] = ordered_json::array();
    for (int h = 1; h <= 3; ++h) {
        for (auto behavior : {Behavior::ActualPurchase, Behavior::PurchaseIntention}) {
            std::string text = "model\tbase\tconfiguration\t0\t1\t2\t3\t4\t5\n";
            for (auto model : kAllLearners) {
                for (auto base : {BaseKind::ProductBased, BaseKind::UserBased}) {
                    for (bool slots : {true, false}) {
                        std::array<std::string, kCategories> cells;
                        cells.fill("-");
                        for (const auto& row : suite.rows) {
                            if (row.hypothesis != h || row.behavior != behavior || row.model != model ||
                                row.base_kind != base || row.time_slots != slots) {
                                continue;
                            }
                            cells[row.category] = fixed6(row.test.p_value);
                        }
                        text.append(learner_code(model)).append("\t").append(base_kind_code(base)).append("\t");
                        text.append(slots ? "Weekday Time Slot" : "Weekday Only");
                        for (const auto& c : cells) text.append("\t").append(c);
                        text.push_back('\n');
                    }
                }
            }
            const auto path =
                out_dir / ("pvalues_h" + std::to_string(h) + "_" + std::string(behavior_code(behavior)) + ".tsv");
            write_text(path, text);
            summary.files.push_back(path);
        }
    }
    for (const auto& row : suite.rows) {
        doc["hypotheses"].push_back({{"hypothesis", row.hypothesis},
                                     {"model", learner_code(row.model)},
                                     {"base", base_kind_code(row.base_kind)},
                                     {"configuration", row.time_slots ? "Weekday Time Slot" : "Weekday Only"},
                                     {"behavior", behavior_code(row.behavior)},
                                     {"category", row.category},
                                     {"group_a", row.test.group_a},
                                     {"group_b", row.test.group_b},
                                     {"n_a", row.test.n_a},
                                     {"n_b", row.test.n_b},
                                     {"t", json_number(row.test.t_stat)},
                                     {"df", json_number(row.test.df)},
                                     {"p", json_number(row.test.p_value)}});
    }
    doc["gaps"] = ordered_json::array();
    for (const auto& g : summary.gaps) doc["gaps"].push_back(g.description);

    const auto json_path = out_dir / "report.json";
    write_text(json_path, doc.dump(2) + "\n");
    summary.files.push_back(json_path);

    const auto gaps_path = out_dir / "gaps.tsv";
    if (!summary.gaps.empty()) {
        std::string text = "gap\n";
        for (const auto& g : summary.gaps) text.append(g.description).push_back('\n');
        write_text(gaps_path, text);
        summary.files.push_back(gaps_path);
    } else {
        std::filesystem::remove(gaps_path);
    }
    return summary;
}

}  // namespace adbench
