// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gvqa::dataset {

/// The eleven OK-VQA knowledge categories.
enum class KnowledgeCategory : std::uint8_t {
    vehicles_transportation,
    brands_companies_products,
    objects_materials_clothing,
    sports_recreation,
    cooking_food,
    geography_history_language_culture,
    people_everyday_life,
    plants_animals,
    science_technology,
    weather_climate,
    other,
};

inline constexpr std::array<KnowledgeCategory, 11> kAllCategories{
    KnowledgeCategory::vehicles_transportation,   KnowledgeCategory::brands_companies_products,
    KnowledgeCategory::objects_materials_clothing, KnowledgeCategory::sports_recreation,
    KnowledgeCategory::cooking_food,              KnowledgeCategory::geography_history_language_culture,
    KnowledgeCategory::people_everyday_life,      KnowledgeCategory::plants_animals,
    KnowledgeCategory::science_technology,        KnowledgeCategory::weather_climate,
    KnowledgeCategory::other,
};

enum class Split : std::uint8_t { id, ood };

/// Canonical label, e.g. "Vehicles & Transportation".
std::string_view category_label(KnowledgeCategory category) noexcept;

/// OK-VQA question_type code, e.g. "one" .. "ten", "other".
std::string_view category_code(KnowledgeCategory category) noexcept;

/// Accepts the canonical label or the OK-VQA code after whitespace trimming.
/// Throws ValidationError for anything else.
KnowledgeCategory parse_category(std::string_view text);

Split split_membership(KnowledgeCategory category) noexcept;
std::string_view split_name(Split split) noexcept;
Split parse_split(std::string_view text);

inline constexpr std::size_t kAnswersPerQuestion = 10;

struct Sample {
    std::string sample_id;
    std::string image_ref;
    std::string question;
    std::array<std::string, kAnswersPerQuestion> gt_answers;
    KnowledgeCategory category = KnowledgeCategory::other;

    Split split() const noexcept { return split_membership(category); }
    bool operator==(const Sample&) const = default;
};

/// Reads the public OK-VQA layout: a questions file ({"questions": [...]}) and
/// an annotations file ({"annotations": [...]}), joined on question_id. Output
/// follows the questions file order.
std::vector<Sample> load_dataset(const std::filesystem::path& annotations_path,
                                 const std::filesystem::path& questions_path);

/// Writes samples back in the same layout `load_dataset` reads.
void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& annotations_path,
                   const std::filesystem::path& questions_path);

/// Lowercase, punctuation to spaces, whitespace collapsed, leading articles dropped.
std::string normalize_answer(std::string_view raw);

/// Deterministic size-`n` subset (input order preserved). Throws RangeError-like
/// ValidationError if n exceeds the input size.
std::vector<Sample> subsample(const std::vector<Sample>& samples, std::size_t n, std::uint64_t seed);

struct SplitView {
    std::vector<Sample> in_distribution;
    std::vector<Sample> out_of_distribution;
};

SplitView partition_by_split(const std::vector<Sample>& samples);

/// One JSON record per line: id, image_ref, question, normalized answers, category, split.
void write_manifest(const std::vector<Sample>& samples, const std::filesystem::path& path);

}  // namespace gvqa::dataset
