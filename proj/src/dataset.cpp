// SPDX-License-Identifier: Apache-2.0
#include "gvqa/dataset.hpp"

#include "gvqa/error.hpp"
#include "gvqa/hashing.hpp"
#include "gvqa/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <unordered_map>
#include <utility>

namespace gvqa::dataset {
namespace {

using nlohmann::json;

struct CategoryNames {
    KnowledgeCategory category;
    std::string_view label;
    std::string_view code;
};

constexpr std::array<CategoryNames, 11> kCategoryNames{{
    {KnowledgeCategory::vehicles_transportation, "Vehicles & Transportation", "one"},
    {KnowledgeCategory::brands_companies_products, "Brands, Companies & Products", "two"},
    {KnowledgeCategory::objects_materials_clothing, "Objects, Materials & Clothing", "three"},
    {KnowledgeCategory::sports_recreation, "Sports & Recreation", "four"},
    {KnowledgeCategory::cooking_food, "Cooking & Food", "five"},
    {KnowledgeCategory::geography_history_language_culture, "Geography, History, Language & Culture", "six"},
    {KnowledgeCategory::people_everyday_life, "People & Everyday Life", "seven"},
    {KnowledgeCategory::plants_animals, "Plants & Animals", "eight"},
    {KnowledgeCategory::science_technology, "Science & Technology", "nine"},
    {KnowledgeCategory::weather_climate, "Weather & Climate", "ten"},
    {KnowledgeCategory::other, "Other", "other"},
}};

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string(), Stage::dataset);
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw StructuralError(Stage::dataset, path.string() + ": " + e.what());
    }
}

void write_json(const json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string(), Stage::dataset);
    }
    out << doc.dump(1) << '\n';
}

std::string id_string(const json& value) {
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_number_integer()) {
        return std::to_string(value.get<std::int64_t>());
    }
    throw StructuralError(Stage::dataset, "question_id must be a string or an integer");
}

json id_value(const std::string& id) {
    const bool numeric = !id.empty() && id.size() < 19 &&
                         std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isdigit(c); });
    if (numeric && (id.size() == 1 || id.front() != '0')) {
        return std::stoll(id);
    }
    return id;
}

std::string coco_image_name(const std::string& subtype, std::int64_t image_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%012lld", static_cast<long long>(image_id));
    return "COCO_" + subtype + "_" + buf + ".jpg";
}

}  // namespace

std::string_view category_label(KnowledgeCategory category) noexcept {
    return kCategoryNames[static_cast<std::size_t>(category)].label;
}

std::string_view category_code(KnowledgeCategory category) noexcept {
    return kCategoryNames[static_cast<std::size_t>(category)].code;
}

KnowledgeCategory parse_category(std::string_view text) {
    const std::string_view trimmed = text::trim(text);
    for (const auto& names : kCategoryNames) {
        if (trimmed == names.label || trimmed == names.code) {
            return names.category;
        }
    }
    throw ValidationError(Stage::dataset, "unrecognized knowledge category '" + std::string(text) + "'");
}

Split split_membership(KnowledgeCategory category) noexcept {
    switch (category) {
        case KnowledgeCategory::vehicles_transportation:
        case KnowledgeCategory::brands_companies_products:
        case KnowledgeCategory::sports_recreation:
        case KnowledgeCategory::science_technology:
        case KnowledgeCategory::weather_climate:
            return Split::ood;
        default:
            return Split::id;
    }
}

std::string_view split_name(Split split) noexcept {
    return split == Split::ood ? "OOD" : "ID";
}

Split parse_split(std::string_view text) {
    if (text == "ID") {
        return Split::id;
    }
    if (text == "OOD") {
        return Split::ood;
    }
    throw ValidationError(Stage::dataset, "unrecognized split '" + std::string(text) + "'");
}

std::vector<Sample> load_dataset(const std::filesystem::path& annotations_path,
                                 const std::filesystem::path& questions_path) {
    const json questions_doc = read_json(questions_path);
    const json annotations_doc = read_json(annotations_path);
    if (!questions_doc.contains("questions") || !questions_doc["questions"].is_array()) {
        throw StructuralError(Stage::dataset, questions_path.string() + ": missing 'questions' array");
    }
    if (!annotations_doc.contains("annotations") || !annotations_doc["annotations"].is_array()) {
        throw StructuralError(Stage::dataset, annotations_path.string() + ": missing 'annotations' array");
    }
    const std::string subtype = questions_doc.value("data_subtype", std::string("val2014"));

    std::unordered_map<std::string, const json*> annotations;
    for (const json& record : annotations_doc["annotations"]) {
        const std::string id = id_string(record.at("question_id"));
        if (!annotations.emplace(id, &record).second) {
            throw StructuralError(Stage::dataset, "duplicate annotation for question_id " + id);
        }
    }

    std::vector<Sample> samples;
    samples.reserve(questions_doc["questions"].size());
    std::unordered_map<std::string, bool> seen;
    for (const json& record : questions_doc["questions"]) {
        Sample sample;
        sample.sample_id = id_string(record.at("question_id"));
        if (!seen.emplace(sample.sample_id, true).second) {
            throw StructuralError(Stage::dataset, "duplicate question_id " + sample.sample_id);
        }
        const auto found = annotations.find(sample.sample_id);
        if (found == annotations.end()) {
            throw StructuralError(Stage::dataset,
                                  "question_id " + sample.sample_id + " has no annotation record");
        }
        const json& annotation = *found->second;

        sample.question = std::string(text::trim(record.at("question").get<std::string>()));
        if (sample.question.empty()) {
            throw ValidationError(Stage::dataset, "question_id " + sample.sample_id + " has an empty question");
        }

        if (record.contains("image_ref")) {
            sample.image_ref = record["image_ref"].get<std::string>();
        } else {
            const json& image_id = record.contains("image_id") ? record["image_id"] : annotation.at("image_id");
            sample.image_ref = coco_image_name(subtype, image_id.get<std::int64_t>());
        }

        const json& answers = annotation.at("answers");
        if (!answers.is_array() || answers.size() != kAnswersPerQuestion) {
            throw ValidationError(Stage::dataset, "question_id " + sample.sample_id + " has " +
                                                      std::to_string(answers.is_array() ? answers.size() : 0) +
                                                      " answers, expected 10");
        }
        for (std::size_t i = 0; i < kAnswersPerQuestion; ++i) {
            const json& answer = answers[i];
            sample.gt_answers[i] = answer.is_string() ? answer.get<std::string>() : answer.at("answer").get<std::string>();
        }

        const std::string category_text = annotation.contains("category")
                                              ? annotation["category"].get<std::string>()
                                              : annotation.value("question_type", std::string("other"));
        sample.category = parse_category(category_text);
        samples.push_back(std::move(sample));
    }

    if (annotations.size() != samples.size()) {
        for (const auto& [id, record] : annotations) {
            if (!seen.contains(id)) {
                throw StructuralError(Stage::dataset, "question_id " + id + " has no question record");
            }
        }
    }
    return samples;
}

void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& annotations_path,
                   const std::filesystem::path& questions_path) {
    json questions = json::array();
    json annotations = json::array();
    for (const Sample& s : samples) {
        questions.push_back({{"question_id", id_value(s.sample_id)}, {"question", s.question}, {"image_ref", s.image_ref}});
        json answers = json::array();
        for (std::size_t i = 0; i < s.gt_answers.size(); ++i) {
            answers.push_back({{"answer_id", i + 1}, {"answer", s.gt_answers[i]}, {"raw_answer", s.gt_answers[i]}});
        }
        annotations.push_back({{"question_id", id_value(s.sample_id)},
                               {"question_type", category_code(s.category)},
                               {"answer_type", "other"},
                               {"answers", std::move(answers)}});
    }
    write_json({{"questions", std::move(questions)}}, questions_path);
    write_json({{"annotations", std::move(annotations)}}, annotations_path);
}

std::string normalize_answer(std::string_view raw) {
    std::string spaced;
    spaced.reserve(raw.size());
    for (unsigned char c : raw) {
        if (std::ispunct(c) || std::isspace(c)) {
            spaced.push_back(' ');
        } else {
            spaced.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    std::vector<std::string_view> words = text::split_words(spaced);
    std::size_t first = 0;
    while (first < words.size() && (words[first] == "a" || words[first] == "an" || words[first] == "the")) {
        ++first;
    }
    std::string out;
    for (std::size_t i = first; i < words.size(); ++i) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out.append(words[i]);
    }
    return out;
}

std::vector<Sample> subsample(const std::vector<Sample>& samples, std::size_t n, std::uint64_t seed) {
    if (n > samples.size()) {
        throw ValidationError(Stage::dataset, "subsample: requested " + std::to_string(n) + " of " +
                                                  std::to_string(samples.size()) + " samples");
    }
    std::vector<std::pair<std::uint64_t, std::size_t>> keyed(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        keyed[i] = {mix(seed, i), i};
    }
    std::nth_element(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(n), keyed.end());
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        chosen.push_back(keyed[i].second);
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<Sample> out;
    out.reserve(n);
    for (std::size_t index : chosen) {
        out.push_back(samples[index]);
    }
    return out;
}

SplitView partition_by_split(const std::vector<Sample>& samples) {
    SplitView view;
    for (const Sample& s : samples) {
        (s.split() == Split::ood ? view.out_of_distribution : view.in_distribution).push_back(s);
    }
    return view;
}

void write_manifest(const std::vector<Sample>& samples, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string(), Stage::dataset);
    }
    for (const Sample& s : samples) {
        json answers = json::array();
        for (const auto& a : s.gt_answers) {
            answers.push_back(normalize_answer(a));
        }
        const json record{{"id", s.sample_id},
                          {"image_ref", s.image_ref},
                          {"question", s.question},
                          {"answers", std::move(answers)},
                          {"category", category_label(s.category)},
                          {"split", split_name(s.split())}};
        out << record.dump() << '\n';
    }
}

}  // namespace gvqa::dataset
