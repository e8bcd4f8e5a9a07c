// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gvqa/dataset.hpp"
#include "gvqa/guardrails.hpp"
#include "gvqa/imaging.hpp"

namespace gvqa::eval {

struct RetrievedDocSummary {
    std::string doc_id;
    double raw_score = 0.0;
    double prob = 0.0;

    bool operator==(const RetrievedDocSummary&) const = default;
};

struct CandidateSummary {
    std::string text;
    double marginal_prob = 0.0;

    bool operator==(const CandidateSummary&) const = default;
};

struct VqaOutcome {
    std::string sample_id;
    dataset::KnowledgeCategory category = dataset::KnowledgeCategory::other;
    std::string predicted_answer;
    std::string draft_answer;
    std::string query_key;
    std::vector<RetrievedDocSummary> retrieval;
    std::vector<CandidateSummary> candidates;
    guardrails::ConfidenceScore confidence;
    guardrails::GroundingReport grounding;
    guardrails::GateDecision gate;
    double soft_accuracy = 0.0;

    dataset::Split split() const noexcept { return dataset::split_membership(category); }
    bool operator==(const VqaOutcome&) const = default;
};

enum class SplitFilter { id, ood, all };

std::string_view split_filter_name(SplitFilter split) noexcept;
SplitFilter parse_split_filter(std::string_view text);

struct RunReport {
    SplitFilter split = SplitFilter::all;
    std::size_t n = 0;
    double accuracy = 0.0;
    double grounding_mean = 0.0;
    double hallucination_rate = 0.0;
    double bce = 0.0;
    double gated_id_rate = 0.0;  ///< fraction of samples the OOD gate let through as ID
    imaging::GridSize grid;
    std::string config_digest;

    bool operator==(const RunReport&) const = default;
};

/// min(m / 3, 1) where m counts normalized ground truths equal to the
/// normalized prediction. Throws ValidationError unless there are 10 answers.
double soft_accuracy(std::string_view prediction, std::span<const std::string> gt_answers);

inline constexpr double kBceEpsilon = 1e-12;

/// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
double bce_loss(std::span<const int> labels, std::span<const double> probs);

/// Means over the outcomes of `split`; BCE labels are (soft_accuracy > 0)
/// against s_combined. Throws ValidationError for an empty split.
RunReport aggregate(std::span<const VqaOutcome> outcomes, SplitFilter split, imaging::GridSize grid = {},
                    std::string config_digest = {});

/// Reports for ALL, ID and OOD (empty splits skipped).
std::vector<RunReport> aggregate_splits(std::span<const VqaOutcome> outcomes, imaging::GridSize grid,
                                        const std::string& config_digest);

/// One pipeline run per grid with everything else fixed; one ALL-split report
/// per grid, tagged with the grid. Errors are rethrown with the grid label.
std::vector<RunReport> ablate_grids(std::span<const imaging::GridSize> grids,
                                    const std::function<std::vector<RunReport>(imaging::GridSize)>& run);

struct SweepRow {
    double threshold = 0.0;
    double hallucination_rate = 0.0;  ///< at tau = threshold
    double gated_id_rate = 0.0;       ///< at lambda = threshold
    double gated_id_rate_on_id = 0.0;
    double gated_id_rate_on_ood = 0.0;
};

/// tau and lambda over 0.0, 0.1, ..., 1.0, recomputed from stored scores.
std::vector<SweepRow> threshold_sweep(std::span<const VqaOutcome> outcomes);

nlohmann::json to_json(const VqaOutcome& outcome);
VqaOutcome outcome_from_json(const nlohmann::json& record);
nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& record);

/// Outcomes file: one JSON record per line.
void write_outcomes(std::span<const VqaOutcome> outcomes, const std::filesystem::path& path);
std::vector<VqaOutcome> read_outcomes(const std::filesystem::path& path);

/// Writes reports.json and summary.tsv into out_dir (created if needed).
void emit_report(std::span<const RunReport> reports, const std::filesystem::path& out_dir);
std::vector<RunReport> read_reports(const std::filesystem::path& reports_json);
void write_sweep(std::span<const SweepRow> rows, const std::filesystem::path& path);

}  // namespace gvqa::eval
