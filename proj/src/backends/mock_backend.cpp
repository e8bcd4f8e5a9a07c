// SPDX-License-Identifier: Apache-2.0
// Desk-scale substitute for the frozen vision-QA, generator and sentence
// encoder. Nothing here models language; it only has to be deterministic,
// honor the backend contracts, and react to every input it is given.
#include "gvqa/backends.hpp"

#include "gvqa/dataset.hpp"
#include "gvqa/error.hpp"
#include "gvqa/hashing.hpp"
#include "gvqa/simd/kernels.hpp"
#include "gvqa/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

namespace gvqa::backends {
namespace {

constexpr std::array kBaseVocabulary = std::to_array<std::string_view>({
    "motocross", "racing", "mustard", "ketchup", "relish", "onion", "pizza", "cake", "banana", "orange",
    "apple", "sandwich", "hot dog", "baseball", "tennis", "surfing", "skiing", "snowboarding", "skateboarding",
    "frisbee", "soccer", "football", "kite", "train", "bus", "airplane", "boat", "car", "truck", "bicycle",
    "motorcycle", "horse", "dog", "cat", "cow", "sheep", "elephant", "giraffe", "zebra", "bear", "bird",
    "fish", "tree", "grass", "flower", "wood", "metal", "plastic", "glass", "leather", "cotton", "brick",
    "steel", "summer", "winter", "spring", "fall", "rain", "snow", "sunny", "cloudy", "kitchen", "bathroom",
    "bedroom", "office", "park", "beach", "mountain", "ocean", "river", "city", "farm", "zoo", "restaurant",
    "church", "england", "france", "japan", "italy", "china", "america", "london", "new york", "computer",
    "phone", "television", "clock", "umbrella", "camera", "laptop", "nike", "coca cola", "honda", "toyota",
    "pepperoni", "cheese", "bread", "coffee", "tea", "wine", "beer", "water", "milk", "chocolate", "vanilla",
    "breakfast", "lunch", "dinner", "police", "firefighter", "chef", "pilot", "doctor", "wedding", "birthday",
    "christmas", "vitamin c", "protein", "electricity", "solar", "wind", "steam",
});

constexpr std::array<std::string_view, 10> kCaptionAdjectives{
    "small", "large", "red", "blue", "white", "dark", "bright", "busy", "quiet", "green"};

constexpr std::array<std::string_view, 30> kCaptionNouns{
    "man", "woman", "child", "dog", "cat", "plate", "table", "street", "field", "beach",
    "motorcycle", "bus", "train", "kitchen", "tree", "car", "horse", "boat", "pizza", "cake",
    "bird", "building", "sky", "snow", "water", "road", "grass", "umbrella", "clock", "bench"};

constexpr std::string_view kEos = "<eos>";
constexpr std::string_view kUnk = "<unk>";
constexpr std::size_t kDistributionSize = 5;

// Domain-separation tags so the different hash streams never collide.
constexpr std::uint64_t kTagToken = 0x746f6b656eULL;
constexpr std::uint64_t kTagDraft = 0x6472616674ULL;
constexpr std::uint64_t kTagLogit = 0x6c6f676974ULL;
constexpr std::uint64_t kTagCaption = 0x6361707469ULL;
constexpr std::uint64_t kTagStep = 0x73746570ULL;

/// Lowercase, punctuation-stripped word tokens.
std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    for (std::string_view word : text::split_words(text)) {
        std::string_view core = text::strip_punct(word);
        if (!core.empty()) {
            tokens.push_back(text::to_lower(core));
        }
    }
    return tokens;
}

std::uint64_t hash_patches(const imaging::PatchGrid& grid) {
    std::uint64_t h = mix(grid.rows, grid.cols);
    for (const imaging::PatchRegion& p : grid.patches) {
        h = mix(h, (static_cast<std::uint64_t>(p.x0) << 32) | p.y0);
        h = mix(h, (static_cast<std::uint64_t>(p.w) << 32) | p.h);
        h = mix(h, fnv1a(std::span<const std::uint8_t>(p.data)));
    }
    return h;
}

double log_sum_exp(std::span<const double> logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) {
        sum += std::exp(l - peak);
    }
    return peak + std::log(sum);
}

class MockBackend final : public Backend {
public:
    MockBackend(std::uint64_t seed, MockOptions options) : m_seed(seed) {
        m_descriptor.kind = BackendKind::mock;
        m_descriptor.model_name = "mock-splitmix64";
        m_descriptor.embedding_dim = options.embedding_dim;
        if (options.embedding_dim == 0) {
            throw ValidationError(Stage::backend, "mock embedding_dim must be >= 1");
        }
        std::set<std::string> answers;
        for (std::string_view a : kBaseVocabulary) {
            answers.emplace(a);
        }
        for (const std::string& a : options.extra_vocabulary) {
            std::string n = dataset::normalize_answer(a);
            if (!n.empty()) {
                answers.insert(std::move(n));
            }
        }
        m_answers.assign(answers.begin(), answers.end());
        std::set<std::string> words;
        for (const std::string& a : m_answers) {
            for (std::string& t : tokenize(a)) {
                words.insert(std::move(t));
            }
        }
        m_vocab_words.assign(words.begin(), words.end());
    }

    const BackendDescriptor& descriptor() const noexcept override { return m_descriptor; }

    VisionQaResult vision_qa(const imaging::RawImage& image, const imaging::PatchGrid& patches,
                             std::string_view question) const override {
        if (text::trim(question).empty()) {
            throw ValidationError(Stage::backend, "vision_qa requires a non-empty question");
        }
        if (image.data.empty() || patches.patches.empty()) {
            throw ValidationError(Stage::backend, "vision_qa requires an image and its patch grid");
        }
        const std::uint64_t question_hash = fnv1a(text::collapse_whitespace(text::to_lower(question)));
        const std::uint64_t patch_hash = hash_patches(patches);

        VisionQaResult result;
        const std::size_t draft_index = mix(mix(m_seed, kTagDraft), question_hash) % m_answers.size();
        result.draft_answer = m_answers[draft_index];

        // Draft gets a logit floor above every other entry so it is the argmax.
        std::vector<std::size_t> picks{draft_index};
        for (std::uint64_t j = 1; picks.size() < std::min(kDistributionSize, m_answers.size()); ++j) {
            const std::size_t idx = mix(mix(m_seed ^ question_hash, kTagDraft), j) % m_answers.size();
            if (std::find(picks.begin(), picks.end(), idx) == picks.end()) {
                picks.push_back(idx);
            }
        }
        std::vector<double> logits(picks.size());
        for (std::size_t j = 0; j < picks.size(); ++j) {
            const double noise = unit_double(mix(mix(m_seed ^ patch_hash, question_hash), j));
            logits[j] = (j == 0 ? 2.5 : 0.0) + 2.0 * noise;
        }
        const double lse = log_sum_exp(logits);
        for (std::size_t j = 0; j < picks.size(); ++j) {
            result.answer_distribution.push_back({m_answers[picks[j]], std::exp(logits[j] - lse)});
        }

        auto pick = [&](auto const& list, std::uint64_t slot) {
            return list[mix(mix(m_seed, kTagCaption), mix(patch_hash, slot)) % list.size()];
        };
        result.caption = "a " + std::string(pick(kCaptionAdjectives, 0)) + " " + std::string(pick(kCaptionNouns, 1)) +
                         " with a " + std::string(pick(kCaptionNouns, 2)) + " in the " +
                         std::string(pick(kCaptionNouns, 3));

        std::vector<double> joint(m_descriptor.embedding_dim, 0.0);
        accumulate_bag(tokenize(question), joint);
        accumulate_bag(tokenize(result.caption), joint);
        accumulate_bag(tokenize(result.draft_answer), joint);
        result.joint_embedding = normalized(std::move(joint));
        return result;
    }

    GenerationResult generate(std::string_view prompt, std::size_t max_tokens) const override {
        if (text::trim(prompt).empty()) {
            throw ValidationError(Stage::backend, "generate requires a non-empty prompt");
        }
        if (max_tokens == 0) {
            throw ValidationError(Stage::backend, "generate requires max_tokens >= 1");
        }
        const PromptModel model = read_prompt(prompt);
        GenerationResult result;
        std::uint64_t prefix = model.prompt_hash;
        for (std::size_t step = 0; step < max_tokens; ++step) {
            const std::vector<double> logits = step_logits(model, step, prefix);
            const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
            if (model.vocab[best] == kEos) {
                break;
            }
            result.token_logprobs.push_back(logits[best] - log_sum_exp(logits));
            if (!result.text.empty()) {
                result.text.push_back(' ');
            }
            result.text += model.vocab[best];
            prefix = mix(prefix, fnv1a(model.vocab[best]));
        }
        return result;
    }

    Embedding embed_text(std::string_view text) const override {
        if (text::trim(text).empty()) {
            throw ValidationError(Stage::backend, "embed_text requires non-empty text");
        }
        std::vector<std::string> tokens = tokenize(text);
        if (tokens.empty()) {
            tokens.emplace_back(text::trim(text));
        }
        std::vector<double> values(m_descriptor.embedding_dim, 0.0);
        accumulate_bag(tokens, values);
        return normalized(std::move(values));
    }

    double sequence_logprob(std::string_view prompt, std::string_view continuation) const override {
        if (text::trim(prompt).empty()) {
            throw ValidationError(Stage::backend, "sequence_logprob requires a non-empty prompt");
        }
        const PromptModel model = read_prompt(prompt);
        std::uint64_t prefix = model.prompt_hash;
        double total = 0.0;
        const std::vector<std::string> tokens = tokenize(continuation);
        for (std::size_t step = 0; step <= tokens.size(); ++step) {
            const std::vector<double> logits = step_logits(model, step, prefix);
            std::string_view wanted = step < tokens.size() ? std::string_view(tokens[step]) : kEos;
            auto it = std::lower_bound(model.vocab.begin(), model.vocab.end(), wanted);
            if (it == model.vocab.end() || *it != wanted) {
                it = std::lower_bound(model.vocab.begin(), model.vocab.end(), kUnk);
            }
            const auto index = static_cast<std::size_t>(it - model.vocab.begin());
            const double lp = logits[index] - log_sum_exp(logits);
            if (!std::isfinite(lp)) {
                return -std::numeric_limits<double>::infinity();
            }
            total += lp;
            if (step < tokens.size()) {
                prefix = mix(prefix, fnv1a(model.vocab[index]));
            }
        }
        return total;
    }

private:
    struct PromptModel {
        std::uint64_t prompt_hash = 0;
        std::vector<std::string> vocab;  ///< sorted; contains <eos> and <unk>
        std::vector<std::string> target;  ///< tokens of the "Initial answer:" line
        std::unordered_set<std::string> context_words;
    };

    PromptModel read_prompt(std::string_view prompt) const {
        PromptModel model;
        model.prompt_hash = mix(mix(m_seed, kTagStep), fnv1a(prompt));
        std::set<std::string> vocab(m_vocab_words.begin(), m_vocab_words.end());
        bool in_context = false;
        std::size_t start = 0;
        while (start <= prompt.size()) {
            const std::size_t end = std::min(prompt.find('\n', start), prompt.size());
            const std::string_view line = prompt.substr(start, end - start);
            constexpr std::string_view kInitial = "Initial answer:";
            if (line.starts_with("Context:")) {
                in_context = true;
            } else if (line.starts_with("Image:") || line.starts_with(kInitial) || line.starts_with("Question:")) {
                in_context = false;
            }
            if (line.starts_with(kInitial)) {
                model.target = tokenize(line.substr(kInitial.size()));
            }
            for (std::string& t : tokenize(line)) {
                if (in_context) {
                    model.context_words.insert(t);
                }
                vocab.insert(std::move(t));
            }
            start = end + 1;
        }
        vocab.emplace(kEos);
        vocab.emplace(kUnk);
        model.vocab.assign(vocab.begin(), vocab.end());
        return model;
    }

    std::vector<double> step_logits(const PromptModel& model, std::size_t step, std::uint64_t prefix) const {
        std::vector<double> logits(model.vocab.size());
        const std::uint64_t step_key = mix(mix(m_seed, kTagLogit), mix(prefix, step));
        for (std::size_t i = 0; i < model.vocab.size(); ++i) {
            const std::string& word = model.vocab[i];
            if (word == kUnk) {
                logits[i] = -8.0;
                continue;
            }
            if (word == kEos) {
                logits[i] = step == 0 ? -std::numeric_limits<double>::infinity()
                                      : (step >= model.target.size() ? 2.5 : 0.0) + unit_double(mix(step_key, i));
                continue;
            }
            double logit = 2.0 * unit_double(mix(step_key, fnv1a(word)));
            if (step < model.target.size() && model.target[step] == word) {
                logit += 1.5;
            }
            if (model.context_words.contains(word)) {
                logit += 1.0;
            }
            logits[i] = logit;
        }
        return logits;
    }

    void accumulate_bag(const std::vector<std::string>& tokens, std::vector<double>& out) const {
        std::vector<double> token_vec(out.size());
        for (const std::string& token : tokens) {
            const std::uint64_t key = mix(mix(m_seed, kTagToken), fnv1a(token));
            for (std::size_t i = 0; i < token_vec.size(); ++i) {
                token_vec[i] = 2.0 * unit_double(mix(key, i)) - 1.0;
            }
            simd::axpy(1.0, token_vec, out);
        }
    }

    std::uint64_t m_seed;
    BackendDescriptor m_descriptor;
    std::vector<std::string> m_answers;
    std::vector<std::string> m_vocab_words;
};

}  // namespace

std::unique_ptr<Backend> mock_backend(std::uint64_t seed, MockOptions options) {
    return std::make_unique<MockBackend>(seed, std::move(options));
}

}  // namespace gvqa::backends
