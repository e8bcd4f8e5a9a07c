// SPDX-License-Identifier: Apache-2.0
#include "gvqa/evalharness.hpp"

#include "gvqa/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace gvqa::eval {
namespace {

using nlohmann::json;

bool in_split(const VqaOutcome& o, SplitFilter split) {
    switch (split) {
        case SplitFilter::id: return o.split() == dataset::Split::id;
        case SplitFilter::ood: return o.split() == dataset::Split::ood;
        case SplitFilter::all: return true;
    }
    return false;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string(), Stage::eval);
    }
    return out;
}

std::string fmt_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

std::string_view split_filter_name(SplitFilter split) noexcept {
    switch (split) {
        case SplitFilter::id: return "ID";
        case SplitFilter::ood: return "OOD";
        case SplitFilter::all: break;
    }
    return "ALL";
}

SplitFilter parse_split_filter(std::string_view text) {
    if (text == "ID") return SplitFilter::id;
    if (text == "OOD") return SplitFilter::ood;
    if (text == "ALL") return SplitFilter::all;
    throw ValidationError(Stage::eval, "unknown split '" + std::string(text) + "'");
}

double soft_accuracy(std::string_view prediction, std::span<const std::string> gt_answers) {
    if (gt_answers.size() != dataset::kAnswersPerQuestion) {
        throw ValidationError(Stage::eval, "soft accuracy needs exactly 10 ground-truth answers, got " +
                                               std::to_string(gt_answers.size()));
    }
    const std::string pred = dataset::normalize_answer(prediction);
    const auto matches = std::count_if(gt_answers.begin(), gt_answers.end(),
                                       [&](const std::string& gt) { return dataset::normalize_answer(gt) == pred; });
    return std::min(static_cast<double>(matches) / 3.0, 1.0);
}

double bce_loss(std::span<const int> labels, std::span<const double> probs) {
    if (labels.size() != probs.size()) {
        throw ValidationError(Stage::eval, "bce: label/probability length mismatch");
    }
    if (labels.empty()) {
        throw ValidationError(Stage::eval, "bce: no predictions");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(probs[i], kBceEpsilon, 1.0 - kBceEpsilon);
        total += labels[i] != 0 ? std::log(p) : std::log(1.0 - p);
    }
    return -total / static_cast<double>(labels.size());
}

RunReport aggregate(std::span<const VqaOutcome> outcomes, SplitFilter split, imaging::GridSize grid,
                    std::string config_digest) {
    RunReport report;
    report.split = split;
    report.grid = grid;
    report.config_digest = std::move(config_digest);
    double accuracy = 0.0;
    double grounding = 0.0;
    std::size_t hallucinated = 0;
    std::size_t gated_id = 0;
    std::vector<int> labels;
    std::vector<double> probs;
    for (const VqaOutcome& o : outcomes) {
        if (!in_split(o, split)) {
            continue;
        }
        ++report.n;
        accuracy += o.soft_accuracy;
        grounding += o.grounding.g_mean;
        hallucinated += o.grounding.hallucinated ? 1 : 0;
        gated_id += o.gate.label == dataset::Split::id ? 1 : 0;
        labels.push_back(o.soft_accuracy > 0.0 ? 1 : 0);
        probs.push_back(o.confidence.s_combined);
    }
    if (report.n == 0) {
        throw ValidationError(Stage::eval, "no outcomes in split " + std::string(split_filter_name(split)));
    }
    const double n = static_cast<double>(report.n);
    report.accuracy = accuracy / n;
    report.grounding_mean = grounding / n;
    report.hallucination_rate = static_cast<double>(hallucinated) / n;
    report.gated_id_rate = static_cast<double>(gated_id) / n;
    report.bce = bce_loss(labels, probs);
    return report;
}

std::vector<RunReport> aggregate_splits(std::span<const VqaOutcome> outcomes, imaging::GridSize grid,
                                        const std::string& config_digest) {
    std::vector<RunReport> reports;
    for (SplitFilter split : {SplitFilter::all, SplitFilter::id, SplitFilter::ood}) {
        const bool any = std::any_of(outcomes.begin(), outcomes.end(), [&](const VqaOutcome& o) { return in_split(o, split); });
        if (any) {
            reports.push_back(aggregate(outcomes, split, grid, config_digest));
        }
    }
    return reports;
}

std::vector<RunReport> ablate_grids(std::span<const imaging::GridSize> grids,
                                    const std::function<std::vector<RunReport>(imaging::GridSize)>& run) {
    if (grids.empty()) {
        throw ValidationError(Stage::eval, "ablation needs at least one grid");
    }
    std::vector<RunReport> reports;
    for (const imaging::GridSize grid : grids) {
        std::vector<RunReport> per_grid;
        try {
            per_grid = run(grid);
        } catch (const Error& e) {
            throw Error(e.stage(), "grid " + imaging::grid_label(grid) + ": " + e.what());
        }
        const auto all = std::find_if(per_grid.begin(), per_grid.end(),
                                      [](const RunReport& r) { return r.split == SplitFilter::all; });
        if (all == per_grid.end()) {
            throw ValidationError(Stage::eval, "grid " + imaging::grid_label(grid) + " produced no ALL report");
        }
        RunReport tagged = *all;
        tagged.grid = grid;
        reports.push_back(std::move(tagged));
    }
    return reports;
}

std::vector<SweepRow> threshold_sweep(std::span<const VqaOutcome> outcomes) {
    std::vector<SweepRow> rows;
    if (outcomes.empty()) {
        return rows;
    }
    for (int i = 0; i <= 10; ++i) {
        const double t = static_cast<double>(i) / 10.0;
        SweepRow row;
        row.threshold = t;
        std::size_t halluc = 0, gated = 0, id_n = 0, id_gated = 0, ood_n = 0, ood_gated = 0;
        for (const VqaOutcome& o : outcomes) {
            halluc += o.grounding.g_mean < t ? 1 : 0;
            const bool pass = o.confidence.s_combined >= t;
            gated += pass ? 1 : 0;
            if (o.split() == dataset::Split::id) {
                ++id_n;
                id_gated += pass ? 1 : 0;
            } else {
                ++ood_n;
                ood_gated += pass ? 1 : 0;
            }
        }
        const double n = static_cast<double>(outcomes.size());
        row.hallucination_rate = static_cast<double>(halluc) / n;
        row.gated_id_rate = static_cast<double>(gated) / n;
        row.gated_id_rate_on_id = id_n ? static_cast<double>(id_gated) / static_cast<double>(id_n) : 0.0;
        row.gated_id_rate_on_ood = ood_n ? static_cast<double>(ood_gated) / static_cast<double>(ood_n) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

json to_json(const VqaOutcome& o) {
    json retrieval = json::array();
    for (const auto& d : o.retrieval) {
        retrieval.push_back({{"doc_id", d.doc_id}, {"raw_score", d.raw_score}, {"prob", d.prob}});
    }
    json candidates = json::array();
    for (const auto& c : o.candidates) {
        candidates.push_back({{"text", c.text}, {"marginal_prob", c.marginal_prob}});
    }
    return json{
        {"sample_id", o.sample_id},
        {"category", dataset::category_label(o.category)},
        {"split", dataset::split_name(o.split())},
        {"predicted_answer", o.predicted_answer},
        {"draft_answer", o.draft_answer},
        {"query", o.query_key},
        {"retrieval", std::move(retrieval)},
        {"candidates", std::move(candidates)},
        {"confidence",
         {{"s_fused", o.confidence.s_fused},
          {"s_visual", o.confidence.s_visual},
          {"s_textual", o.confidence.s_textual},
          {"s_combined", o.confidence.s_combined},
          {"degraded", o.confidence.degraded}}},
        {"grounding",
         {{"g_mean", o.grounding.g_mean},
          {"per_gt_cosines", o.grounding.per_gt_cosines},
          {"tau", o.grounding.tau},
          {"hallucinated", o.grounding.hallucinated}}},
        {"gate",
         {{"label", dataset::split_name(o.gate.label)}, {"threshold", o.gate.threshold}, {"score", o.gate.score}}},
        {"soft_accuracy", o.soft_accuracy},
    };
}

VqaOutcome outcome_from_json(const json& r) {
    try {
        VqaOutcome o;
        o.sample_id = r.at("sample_id").get<std::string>();
        o.category = dataset::parse_category(r.at("category").get<std::string>());
        o.predicted_answer = r.at("predicted_answer").get<std::string>();
        o.draft_answer = r.value("draft_answer", std::string{});
        o.query_key = r.value("query", std::string{});
        for (const json& d : r.value("retrieval", json::array())) {
            o.retrieval.push_back({d.at("doc_id").get<std::string>(), d.at("raw_score").get<double>(), d.at("prob").get<double>()});
        }
        for (const json& c : r.value("candidates", json::array())) {
            o.candidates.push_back({c.at("text").get<std::string>(), c.at("marginal_prob").get<double>()});
        }
        const json& conf = r.at("confidence");
        o.confidence = {conf.at("s_fused").get<double>(), conf.at("s_visual").get<double>(),
                        conf.at("s_textual").get<double>(), conf.at("s_combined").get<double>(),
                        conf.value("degraded", false)};
        const json& g = r.at("grounding");
        o.grounding = {g.at("g_mean").get<double>(), g.at("per_gt_cosines").get<std::vector<double>>(),
                       g.at("tau").get<double>(), g.at("hallucinated").get<bool>()};
        const json& gate = r.at("gate");
        o.gate = {dataset::parse_split(gate.at("label").get<std::string>()), gate.at("threshold").get<double>(),
                  gate.at("score").get<double>()};
        o.soft_accuracy = r.at("soft_accuracy").get<double>();
        return o;
    } catch (const json::exception& e) {
        throw ValidationError(Stage::eval, std::string("malformed outcome record: ") + e.what());
    }
}

json to_json(const RunReport& r) {
    return json{{"split", split_filter_name(r.split)},
                {"n", r.n},
                {"accuracy", r.accuracy},
                {"grounding_mean", r.grounding_mean},
                {"hallucination_rate", r.hallucination_rate},
                {"bce", r.bce},
                {"gated_id_rate", r.gated_id_rate},
                {"grid", imaging::grid_label(r.grid)},
                {"config_digest", r.config_digest}};
}

RunReport report_from_json(const json& r) {
    try {
        RunReport report;
        report.split = parse_split_filter(r.at("split").get<std::string>());
        report.n = r.at("n").get<std::size_t>();
        report.accuracy = r.at("accuracy").get<double>();
        report.grounding_mean = r.at("grounding_mean").get<double>();
        report.hallucination_rate = r.at("hallucination_rate").get<double>();
        report.bce = r.at("bce").get<double>();
        report.gated_id_rate = r.value("gated_id_rate", 0.0);
        report.grid = imaging::parse_grid(r.at("grid").get<std::string>());
        report.config_digest = r.at("config_digest").get<std::string>();
        return report;
    } catch (const json::exception& e) {
        throw ValidationError(Stage::eval, std::string("malformed report record: ") + e.what());
    }
}

void write_outcomes(std::span<const VqaOutcome> outcomes, const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    for (const VqaOutcome& o : outcomes) {
        out << to_json(o).dump() << '\n';
    }
}

std::vector<VqaOutcome> read_outcomes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open outcomes file " + path.string(), Stage::eval);
    }
    std::vector<VqaOutcome> outcomes;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            outcomes.push_back(outcome_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ValidationError(Stage::eval, path.string() + ": " + e.what());
        }
    }
    return outcomes;
}

void emit_report(std::span<const RunReport> reports, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message(), Stage::eval);
    }
    json all = json::array();
    for (const RunReport& r : reports) {
        all.push_back(to_json(r));
    }
    open_for_write(out_dir / "reports.json") << all.dump(2) << '\n';

    std::ofstream tsv = open_for_write(out_dir / "summary.tsv");
    tsv << "split\tgrid\tn\taccuracy\tgrounding_mean\thallucination_rate\tbce\tgated_id_rate\tconfig_digest\n";
    for (const RunReport& r : reports) {
        tsv << split_filter_name(r.split) << '\t' << imaging::grid_label(r.grid) << '\t' << r.n << '\t'
            << fmt_number(r.accuracy) << '\t' << fmt_number(r.grounding_mean) << '\t'
            << fmt_number(r.hallucination_rate) << '\t' << fmt_number(r.bce) << '\t' << fmt_number(r.gated_id_rate)
            << '\t' << r.config_digest << '\n';
    }
}

std::vector<RunReport> read_reports(const std::filesystem::path& reports_json) {
    std::ifstream in(reports_json);
    if (!in) {
        throw IoError("cannot open " + reports_json.string(), Stage::eval);
    }
    json all;
    try {
        all = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(Stage::eval, reports_json.string() + ": " + e.what());
    }
    std::vector<RunReport> reports;
    for (const json& r : all) {
        reports.push_back(report_from_json(r));
    }
    return reports;
}

void write_sweep(std::span<const SweepRow> rows, const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    out << "threshold\thallucination_rate_at_tau\tgated_id_rate_at_lambda\tgated_id_rate_ID\tgated_id_rate_OOD\n";
    for (const SweepRow& row : rows) {
        out << fmt_number(row.threshold) << '\t' << fmt_number(row.hallucination_rate) << '\t'
            << fmt_number(row.gated_id_rate) << '\t' << fmt_number(row.gated_id_rate_on_id) << '\t'
            << fmt_number(row.gated_id_rate_on_ood) << '\n';
    }
}

}  // namespace gvqa::eval
