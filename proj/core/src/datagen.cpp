#include "grpolab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "grpolab/errors.hpp"
#include "grpolab/rng.hpp"
#include "grpolab/text.hpp"

namespace grpolab {

namespace {

const std::vector<std::vector<std::string>>& class_term_banks() {
    static const std::vector<std::vector<std::string>> banks = {
        {"malignant", "epithelial", "sheets", "pleomorphic", "nuclei", "mitotic", "invasive",
         "nests", "hyperchromatic", "atypia", "irregular", "crowded"},
        {"glandular", "benign", "uniform", "tubular", "columnar", "rounded", "organized",
         "polypoid", "regular", "orderly", "cohesive", "bland"},
        {"fibrous", "connective", "spindle", "collagen", "bundles", "fibroblasts", "vascular",
         "scattered", "loose", "supportive", "wavy", "sparse"},
        {"necrotic", "debris", "ghost", "eosinophilic", "amorphous", "karyorrhexis", "fragmented",
         "acellular", "granular", "smudged", "degenerate", "lysed"},
        {"lymphocytes", "follicles", "germinal", "centers", "small", "dense", "monomorphic",
         "nodular", "darkly", "packed", "immature", "reactive"},
        {"squamous", "keratin", "layered", "stratified", "basal", "cornified", "maturation",
         "surface", "flattened", "superficial", "lamellar", "plated"},
    };
    return banks;
}

const std::vector<std::string>& option_letters() {
    static const std::vector<std::string> letters = {"a", "b", "c", "d", "e", "f"};
    return letters;
}

std::string pick_term(const std::vector<std::string>& bank, Rng& rng) {
    return bank[rng.uniform_int(bank.size())];
}

std::vector<std::string> pick_distinct_terms(const std::vector<std::string>& bank, int count,
                                             Rng& rng) {
    std::vector<std::size_t> idx(bank.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) out.push_back(bank[idx[static_cast<std::size_t>(i)]]);
    return out;
}

std::string make_description(int class_id, Rng& rng) {
    const auto terms = pick_distinct_terms(class_term_banks()[static_cast<std::size_t>(class_id)],
                                           6, rng);
    return "the patch shows " + terms[0] + " " + terms[1] + " tissue with " + terms[2] + " " +
           terms[3] + " and " + terms[4] + " " + terms[5];
}

std::string make_analysis(const std::string& class_name, int class_id, int clauses, Rng& rng) {
    const auto& bank = class_term_banks()[static_cast<std::size_t>(class_id)];
    std::string out;
    for (int i = 0; i < clauses; ++i) {
        const std::string t = pick_term(bank, rng);
        std::string clause;
        switch (i % 8) {
            case 0: clause = "the " + t + " quality is evident throughout the examined field"; break;
            case 1: clause = "a distinctly " + t + " character dominates the visible region"; break;
            case 2: clause = "there is a clearly " + t + " appearance across this area"; break;
            case 3: clause = "the " + t + " component stands out against the background"; break;
            case 4: clause = "such a " + t + " pattern is typical for " + class_name; break;
            case 5: clause = "further " + t + " change supports the same reading"; break;
            case 6: clause = "the overall " + t + " impression remains consistent and diffuse"; break;
            default: clause = "the " + t + " features argue against the remaining alternatives"; break;
        }
        if (!out.empty()) out += " ";
        out += clause;
    }
    return out;
}

std::string grade_word(int class_id) {
    static const std::vector<std::string> words = {"high", "low", "minimal", "marked",
                                                   "moderate", "minimal"};
    return words[static_cast<std::size_t>(class_id)];
}

std::string severity_word(int class_id) {
    static const std::vector<std::string> words = {"severe", "mild", "limited", "extensive",
                                                   "moderate", "limited"};
    return words[static_cast<std::size_t>(class_id)];
}

std::string compose_answer(const std::string& observation, const std::string& analysis,
                           const std::string& conclusion) {
    return "[Observation] " + observation + " [Analysis] " + analysis + " [Conclusion] " +
           conclusion;
}

struct QaParts {
    std::string question;
    std::vector<std::string> answer_space;
    GoldAnswer gold;
};

QaParts make_mcq(const World& world, const SlidePatch& patch, int option_count, Rng& rng) {
    const auto& names = world.class_names;
    std::vector<int> others;
    for (int c = 0; c < static_cast<int>(names.size()); ++c) {
        if (c != patch.class_id) others.push_back(c);
    }
    rng.shuffle(others);
    std::vector<int> options;
    options.push_back(patch.class_id);
    for (int i = 0; i + 1 < option_count; ++i) options.push_back(others[static_cast<std::size_t>(i)]);
    std::sort(options.begin(), options.end());

    std::vector<int> letter_of(options.size());
    std::iota(letter_of.begin(), letter_of.end(), 0);
    rng.shuffle(letter_of);

    QaParts parts;
    std::string listing;
    std::string gold_letter;
    for (int i = 0; i < option_count; ++i) {
        const std::string& letter = option_letters()[static_cast<std::size_t>(letter_of[static_cast<std::size_t>(i)])];
        listing += " " + names[static_cast<std::size_t>(options[static_cast<std::size_t>(i)])] + " " + letter;
        parts.answer_space.push_back(to_upper(option_letters()[static_cast<std::size_t>(i)]));
        if (options[static_cast<std::size_t>(i)] == patch.class_id) gold_letter = letter;
    }
    parts.question = "which tissue is shown ? options are" + listing;
    const std::string& cls = names[static_cast<std::size_t>(patch.class_id)];
    const std::string observation = cls + " is at " + gold_letter;
    parts.gold.observation = observation;
    parts.gold.conclusion_label = to_upper(gold_letter);
    parts.gold.full_text = compose_answer(observation, "the answer is " + gold_letter,
                                          "option " + gold_letter);
    return parts;
}

QaParts make_truefalse(const World& world, const SlidePatch& patch, double corruption_rate,
                       Rng& rng) {
    const auto& names = world.class_names;
    const bool corrupt = rng.uniform() < corruption_rate;
    int asserted = patch.class_id;
    if (corrupt) {
        std::vector<int> others;
        for (int c = 0; c < static_cast<int>(names.size()); ++c) {
            if (c != patch.class_id) others.push_back(c);
        }
        asserted = others[rng.uniform_int(others.size())];
    }
    const std::string& asserted_name = names[static_cast<std::size_t>(asserted)];
    const std::string& cls = names[static_cast<std::size_t>(patch.class_id)];

    QaParts parts;
    parts.question = "true or false : this patch mainly shows " + asserted_name;
    parts.answer_space = {"yes", "no"};
    const std::string observation =
        "claim is " + asserted_name + " and patch shows " + cls;
    parts.gold.observation = observation;
    parts.gold.conclusion_label = corrupt ? "no" : "yes";
    parts.gold.full_text = compose_answer(observation,
                                          "the verdict is " + parts.gold.conclusion_label,
                                          parts.gold.conclusion_label);
    return parts;
}

std::string pad_id(const std::string& prefix, int n) {
    std::ostringstream out;
    out << prefix << "-";
    std::string digits = std::to_string(n);
    for (std::size_t i = digits.size(); i < 5; ++i) out << '0';
    out << digits;
    return out.str();
}

}  // namespace

const std::vector<std::string>& tissue_class_names() {
    static const std::vector<std::string> names = {"carcinoma", "adenoma", "stroma",
                                                   "necrosis", "lymphoid", "epidermis"};
    return names;
}

const std::vector<std::string>& category_tags() {
    static const std::vector<std::string> tags = {
        "morphology-description", "cellular-detail",   "architecture-pattern",
        "tissue-type",            "region-context",    "grading",
        "severity-assessment",    "finding-summary",   "diagnosis-mcq",
        "diagnosis-truefalse"};
    return tags;
}

const std::vector<std::string>& pretrain_questions() {
    static const std::vector<std::string> questions = {
        "describe this patch",
        "what does this image show",
        "give a caption for this region",
        "what tissue appears here",
        "summarize the visible field",
        "what is seen in this view",
        "characterize this area",
        "state the main visual finding",
        "describe the texture of this patch",
        "what stands out in this image"};
    return questions;
}

void DatagenConfig::validate() const {
    if (slides < 1) throw ConfigError("datagen slides must be >= 1");
    if (patches_per_slide < 10) throw ConfigError("datagen patches_per_slide must be >= 10");
    if (class_count < 2 || class_count > static_cast<int>(tissue_class_names().size())) {
        throw ConfigError("datagen class_count must lie in [2, " +
                          std::to_string(tissue_class_names().size()) + "]");
    }
    if (noise < 0.0) throw ConfigError("datagen noise must be >= 0");
    if (feature_a_dim < 1 || feature_b_dim < 1) {
        throw ConfigError("datagen feature dimensions must be positive");
    }
    if (pretrain_per_slide < 1) throw ConfigError("datagen pretrain_per_slide must be >= 1");
    if (sft_per_slide < 1 || sft_per_slide > patches_per_slide) {
        throw ConfigError("datagen sft_per_slide must lie in [1, patches_per_slide]");
    }
    if (rl_count < 1) throw ConfigError("datagen rl_count must be >= 1");
    if (eval_fraction < 0.0 || eval_fraction >= 1.0) {
        throw ConfigError("datagen eval_fraction must lie in [0, 1)");
    }
    if (mcq_options < 2 || mcq_options > class_count ||
        mcq_options > static_cast<int>(option_letters().size())) {
        throw ConfigError("datagen mcq_options must lie in [2, class_count]");
    }
    if (truefalse_fraction < 0.0 || truefalse_fraction > 1.0) {
        throw ConfigError("datagen truefalse_fraction must lie in [0, 1]");
    }
    if (corruption_rate < 0.0 || corruption_rate > 1.0) {
        throw ConfigError("datagen corruption_rate must lie in [0, 1]");
    }
    if (analysis_clauses < 1) throw ConfigError("datagen analysis_clauses must be >= 1");
    if (cold_start_k < 1) throw ConfigError("datagen cold_start_k must be >= 1");
}

World generate_world(std::uint64_t seed, const DatagenConfig& config) {
    config.validate();
    World world;
    world.config = config;
    world.seed = seed;
    for (int c = 0; c < config.class_count; ++c) {
        world.class_names.push_back(tissue_class_names()[static_cast<std::size_t>(c)]);
    }

    auto make_centroid = [&](int class_id, int role, int dim) {
        Rng rng(derive_seed(seed, 0xC0000000ULL + static_cast<std::uint64_t>(class_id) * 2 +
                                      static_cast<std::uint64_t>(role)));
        std::vector<double> v(static_cast<std::size_t>(dim));
        double norm = 0.0;
        for (double& x : v) {
            x = rng.gaussian();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        return v;
    };
    for (int c = 0; c < config.class_count; ++c) {
        world.centroid_a.push_back(make_centroid(c, 0, config.feature_a_dim));
        world.centroid_b.push_back(make_centroid(c, 1, config.feature_b_dim));
    }

    for (int s = 0; s < config.slides; ++s) {
        SyntheticSlide slide;
        slide.slide_id = s;
        const std::uint64_t slide_seed = derive_seed(seed, static_cast<std::uint64_t>(s));
        for (int p = 0; p < config.patches_per_slide; ++p) {
            Rng rng(derive_seed(slide_seed, static_cast<std::uint64_t>(p)));
            SlidePatch patch;
            patch.patch_id = p;
            patch.class_id = static_cast<int>(rng.uniform_int(
                static_cast<std::uint64_t>(config.class_count)));
            patch.description = make_description(patch.class_id, rng);
            patch.feature_a.resize(static_cast<std::size_t>(config.feature_a_dim));
            for (int i = 0; i < config.feature_a_dim; ++i) {
                patch.feature_a[static_cast<std::size_t>(i)] =
                    world.centroid_a[static_cast<std::size_t>(patch.class_id)]
                                    [static_cast<std::size_t>(i)] +
                    config.noise * rng.gaussian();
            }
            patch.feature_b.resize(static_cast<std::size_t>(config.feature_b_dim));
            for (int i = 0; i < config.feature_b_dim; ++i) {
                patch.feature_b[static_cast<std::size_t>(i)] =
                    world.centroid_b[static_cast<std::size_t>(patch.class_id)]
                                    [static_cast<std::size_t>(i)] +
                    config.noise * rng.gaussian();
            }
            slide.patches.push_back(std::move(patch));
        }
        world.slides.push_back(std::move(slide));
    }
    return world;
}

std::vector<PretrainPair> build_pretrain_pool(const World& world, std::uint64_t seed) {
    std::vector<PretrainPair> pool;
    int counter = 0;
    for (const SyntheticSlide& slide : world.slides) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(slide.slide_id)));
        std::vector<std::size_t> idx(slide.patches.size());
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        const std::size_t take = std::min<std::size_t>(
            static_cast<std::size_t>(world.config.pretrain_per_slide), slide.patches.size());
        for (std::size_t i = 0; i < take; ++i) {
            const SlidePatch& patch = slide.patches[idx[i]];
            PretrainPair pair;
            pair.pair_id = pad_id("pre", counter++);
            pair.slide_id = slide.slide_id;
            pair.patch_id = patch.patch_id;
            pair.feature_a = patch.feature_a;
            pair.feature_b = patch.feature_b;
            pair.question = pretrain_questions()[rng.uniform_int(pretrain_questions().size())];
            pair.caption = patch.description;
            pool.push_back(std::move(pair));
        }
    }
    return pool;
}

std::vector<QARecord> build_sft_set(const World& world, const std::vector<PretrainPair>& pool,
                                    std::uint64_t seed) {
    std::unordered_set<long long> in_pool;
    for (const PretrainPair& pair : pool) {
        in_pool.insert(static_cast<long long>(pair.slide_id) * 1000000 + pair.patch_id);
    }
    const auto& tags = category_tags();
    const DatagenConfig& cfg = world.config;

    std::vector<QARecord> records;
    int counter = 0;
    for (const SyntheticSlide& slide : world.slides) {
        Rng pick_rng(derive_seed(derive_seed(seed, 0x1ULL), static_cast<std::uint64_t>(slide.slide_id)));
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < slide.patches.size(); ++i) {
            const long long key = static_cast<long long>(slide.slide_id) * 1000000 +
                                  slide.patches[i].patch_id;
            if (in_pool.find(key) == in_pool.end()) candidates.push_back(i);
        }
        // Best effort only: fall back to every patch when the pool already
        // covers too much of the slide.
        if (candidates.size() < static_cast<std::size_t>(cfg.sft_per_slide)) {
            candidates.resize(slide.patches.size());
            std::iota(candidates.begin(), candidates.end(), 0);
        }
        pick_rng.shuffle(candidates);

        for (int r = 0; r < cfg.sft_per_slide; ++r) {
            const SlidePatch& patch = slide.patches[candidates[static_cast<std::size_t>(r)]];
            const std::string& category = tags[static_cast<std::size_t>(r) % tags.size()];
            Rng rng(derive_seed(derive_seed(seed, 0x2ULL), static_cast<std::uint64_t>(counter)));

            QARecord rec;
            rec.record_id = pad_id("sft", counter++);
            rec.slide_id = slide.slide_id;
            rec.patch_id = patch.patch_id;
            rec.feature_a = patch.feature_a;
            rec.feature_b = patch.feature_b;
            rec.category = category;
            rec.split = "sft";

            const std::string& cls = world.class_names[static_cast<std::size_t>(patch.class_id)];
            if (category == "diagnosis-mcq") {
                QaParts parts = make_mcq(world, patch, cfg.mcq_options, rng);
                rec.question = parts.question;
                rec.answer_space = parts.answer_space;
                rec.gold = parts.gold;
            } else if (category == "diagnosis-truefalse") {
                QaParts parts = make_truefalse(world, patch, cfg.corruption_rate, rng);
                rec.question = parts.question;
                rec.answer_space = parts.answer_space;
                rec.gold = parts.gold;
            } else {
                const std::string analysis =
                    make_analysis(cls, patch.class_id, cfg.analysis_clauses, rng);
                std::string question;
                std::string conclusion;
                if (category == "morphology-description") {
                    question = "describe the overall morphology visible in this patch";
                    conclusion = "the morphology is best explained by " + cls;
                } else if (category == "cellular-detail") {
                    question = "what cellular detail stands out most in this patch";
                    conclusion = "the detail points to " + cls;
                } else if (category == "architecture-pattern") {
                    question = "what architectural pattern does the tissue in this patch form";
                    conclusion = "the architecture corresponds to " + cls;
                } else if (category == "tissue-type") {
                    question = "what tissue type is present in this patch";
                    conclusion = "the tissue type here is " + cls;
                } else if (category == "region-context") {
                    question = "how does this region relate to the surrounding slide";
                    conclusion = "the region reads as " + cls + " within the slide";
                } else if (category == "grading") {
                    question = "how would you grade the changes seen in this patch";
                    conclusion = "the changes of " + cls + " merit a " + grade_word(patch.class_id) +
                                 " grade designation";
                } else if (category == "severity-assessment") {
                    question = "how severe are the findings in this patch";
                    conclusion = "the findings of " + cls + " are " + severity_word(patch.class_id) +
                                 " in extent";
                } else {
                    question = "summarize the key finding captured by this patch";
                    conclusion = "the key finding is " + cls;
                }
                rec.question = question;
                rec.answer_space = world.class_names;
                rec.gold.observation = patch.description;
                rec.gold.conclusion_label = cls;
                rec.gold.full_text = compose_answer(patch.description, analysis, conclusion);
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

std::vector<QARecord> build_rl_set(const World& world, std::uint64_t seed,
                                   const DatagenConfig& config) {
    const int tf_count = static_cast<int>(
        std::lround(static_cast<double>(config.rl_count) * config.truefalse_fraction));
    const int mcq_count = config.rl_count - tf_count;

    std::vector<QARecord> records;
    for (int i = 0; i < config.rl_count; ++i) {
        Rng rng(derive_seed(derive_seed(seed, 0x4ULL), static_cast<std::uint64_t>(i)));
        const SyntheticSlide& slide =
            world.slides[rng.uniform_int(world.slides.size())];
        const SlidePatch& patch = slide.patches[rng.uniform_int(slide.patches.size())];

        QARecord rec;
        rec.slide_id = slide.slide_id;
        rec.patch_id = patch.patch_id;
        rec.feature_a = patch.feature_a;
        rec.feature_b = patch.feature_b;
        if (i < mcq_count) {
            rec.category = "diagnosis-mcq";
            QaParts parts = make_mcq(world, patch, config.mcq_options, rng);
            rec.question = parts.question;
            rec.answer_space = parts.answer_space;
            rec.gold = parts.gold;
        } else {
            rec.category = "diagnosis-truefalse";
            QaParts parts = make_truefalse(world, patch, config.corruption_rate, rng);
            rec.question = parts.question;
            rec.answer_space = parts.answer_space;
            rec.gold = parts.gold;
        }
        records.push_back(std::move(rec));
    }

    Rng split_rng(derive_seed(seed, 0x3EULL));
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    split_rng.shuffle(order);
    const int eval_count = static_cast<int>(
        std::lround(static_cast<double>(config.rl_count) * config.eval_fraction));
    const int rl_kept = config.rl_count - eval_count;

    std::vector<QARecord> out;
    out.reserve(records.size());
    for (int i = 0; i < config.rl_count; ++i) {
        QARecord rec = std::move(records[order[static_cast<std::size_t>(i)]]);
        if (i < rl_kept) {
            rec.record_id = pad_id("rl", i);
            rec.split = "rl";
        } else {
            rec.record_id = pad_id("eval", i - rl_kept);
            rec.split = "eval";
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<QARecord> curate_cold_start(const std::vector<QARecord>& sft_set, int k) {
    if (k < 0 || static_cast<std::size_t>(k) > sft_set.size()) {
        throw Error("curate_cold_start: k must lie in [0, set size]");
    }
    struct Entry {
        std::size_t tokens;
        std::string record_id;
        std::size_t index;
    };
    std::map<std::string, std::vector<Entry>> by_category;
    for (std::size_t i = 0; i < sft_set.size(); ++i) {
        by_category[sft_set[i].category].push_back(
            {split_whitespace(sft_set[i].gold.full_text).size(), sft_set[i].record_id, i});
    }
    for (auto& [_, entries] : by_category) {
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.tokens != b.tokens) return a.tokens > b.tokens;
            return a.record_id < b.record_id;
        });
    }

    const int categories = static_cast<int>(by_category.size());
    const int base = k / categories;
    const int extra = k % categories;

    std::vector<QARecord> out;
    std::vector<std::pair<std::string, std::size_t>> leftovers;  // (category, next index)
    int c = 0;
    for (auto& [category, entries] : by_category) {
        const int quota = base + (c < extra ? 1 : 0);
        const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(quota),
                                                       entries.size());
        for (std::size_t i = 0; i < take; ++i) out.push_back(sft_set[entries[i].index]);
        if (take < entries.size()) leftovers.emplace_back(category, take);
        ++c;
    }
    // Short categories can leave the quota unfilled; top up with the longest
    // remaining answers regardless of category.
    while (static_cast<int>(out.size()) < k) {
        const Entry* best = nullptr;
        std::pair<std::string, std::size_t>* best_slot = nullptr;
        for (auto& slot : leftovers) {
            auto& entries = by_category[slot.first];
            if (slot.second >= entries.size()) continue;
            const Entry& cand = entries[slot.second];
            if (best == nullptr || cand.tokens > best->tokens ||
                (cand.tokens == best->tokens && cand.record_id < best->record_id)) {
                best = &cand;
                best_slot = &slot;
            }
        }
        if (best == nullptr) break;
        out.push_back(sft_set[best->index]);
        ++best_slot->second;
    }
    return out;
}

DatasetBundle build_datasets(std::uint64_t seed, const DatagenConfig& config) {
    DatasetBundle bundle;
    bundle.world = generate_world(derive_seed(seed, 0x10ULL), config);
    bundle.pretrain = build_pretrain_pool(bundle.world, derive_seed(seed, 0x20ULL));
    std::vector<QARecord> sft = build_sft_set(bundle.world, bundle.pretrain,
                                              derive_seed(seed, 0x30ULL));
    std::vector<QARecord> rl_all = build_rl_set(bundle.world, derive_seed(seed, 0x40ULL), config);

    std::vector<std::string> corpus;
    for (const PretrainPair& pair : bundle.pretrain) {
        corpus.push_back(pair.caption);
        corpus.push_back(pair.question);
    }
    for (const QARecord& rec : sft) {
        corpus.push_back(rec.question);
        corpus.push_back(rec.gold.full_text);
    }
    for (const QARecord& rec : rl_all) {
        corpus.push_back(rec.question);
        corpus.push_back(rec.gold.full_text);
    }
    bundle.vocab = Vocabulary::build(corpus);

    auto fill_prompt = [&bundle](QARecord& rec) {
        rec.prompt_token_ids = bundle.vocab.encode(rec.question);
    };
    for (QARecord& rec : sft) fill_prompt(rec);
    for (QARecord& rec : rl_all) fill_prompt(rec);

    bundle.sft = std::move(sft);
    for (QARecord& rec : rl_all) {
        if (rec.split == "rl") {
            bundle.rl.push_back(std::move(rec));
        } else {
            bundle.eval.push_back(std::move(rec));
        }
    }
    bundle.cold = curate_cold_start(bundle.sft, config.cold_start_k);
    return bundle;
}

}  // namespace grpolab
