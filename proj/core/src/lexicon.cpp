#include "prosim/lexicon.hpp"

#include <algorithm>
#include <cmath>

#include "prosim/error.hpp"

namespace prosim {

void LexiconConfig::validate_and_normalize() {
    if (!(novelty_mass >= 0.0 && novelty_mass < 1.0))
        throw ValidationError("lexicon: novelty_mass must be in [0,1)");
    if (!(length_continue_prob > 0.0 && length_continue_prob < 1.0))
        throw ValidationError("lexicon: length_continue_prob must be in (0,1)");
    if (char_alphabet.empty()) throw ValidationError("lexicon: char_alphabet is empty");
    std::string sorted = char_alphabet;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError("lexicon: char_alphabet has duplicate characters");

    double total = 0.0;
    for (auto& [form, w] : seed_forms) {
        if (!(w > 0.0)) throw ValidationError("lexicon: seed weight for " + form.spec() + " must be > 0");
        total += w;
    }
    if (!seed_forms.empty()) {
        for (auto& [form, w] : seed_forms) w /= total;
        // Duplicate seed forms would make weights ambiguous.
        for (size_t i = 0; i < seed_forms.size(); ++i)
            for (size_t j = i + 1; j < seed_forms.size(); ++j)
                if (seed_forms[i].first == seed_forms[j].first)
                    throw ValidationError("lexicon: duplicate seed form " + seed_forms[i].first.spec());
    } else if (novelty_mass == 0.0) {
        throw ValidationError("lexicon: no seed forms and no novelty mass leaves an empty base measure");
    }
}

LexiconConfig LexiconConfig::defaults() {
    LexiconConfig cfg;
    cfg.seed_forms = {
        {make_paradigm("he/him/his/his/himself"), 0.45},
        {make_paradigm("she/her/her/hers/herself"), 0.45},
        {make_paradigm("they/them/their/theirs/themself"), 0.10},
    };
    cfg.validate_and_normalize();
    return cfg;
}

double cell_string_score(std::string_view cell, const LexiconConfig& cfg) {
    const double p = cfg.length_continue_prob;
    const double inv_a = 1.0 / static_cast<double>(cfg.char_alphabet.size());
    double score = 1.0 - p;
    for (size_t i = 0; i < cell.size(); ++i) {
        if (cfg.char_alphabet.find(cell[i]) == std::string::npos) return 0.0;
        if (i > 0) score *= p;
        score *= inv_a;
    }
    return score;
}

double string_model_score(const Form& form, const LexiconConfig& cfg) {
    if (form.kind() == FormKind::no_pronoun) return 0.0;
    double score = 1.0;
    for (const auto& cell : form.cells()) score *= cell_string_score(cell, cfg);
    return score;
}

double base_measure_score(const Form& form, const LexiconConfig& cfg) {
    const double eta = cfg.novelty_mass;
    double seed_w = 0.0;
    for (const auto& [f, w] : cfg.seed_forms) {
        if (f == form) {
            seed_w = w;
            break;
        }
    }
    return (1.0 - eta) * seed_w + eta * string_model_score(form, cfg);
}

namespace {

std::string sample_cell(const LexiconConfig& cfg, Rng& rng) {
    std::string s;
    s += cfg.char_alphabet[rng.next_below(cfg.char_alphabet.size())];
    while (rng.next_double() < cfg.length_continue_prob)
        s += cfg.char_alphabet[rng.next_below(cfg.char_alphabet.size())];
    return s;
}

} // namespace

Form sample_novel_form(const LexiconConfig& cfg, Rng& rng, const std::vector<Form>& exclude) {
    for (;;) {
        Form f = rng.next_double() < 0.5 ? Form::name(sample_cell(cfg, rng))
                                         : Form::paradigm({sample_cell(cfg, rng), sample_cell(cfg, rng),
                                                           sample_cell(cfg, rng), sample_cell(cfg, rng),
                                                           sample_cell(cfg, rng)});
        if (std::find(exclude.begin(), exclude.end(), f) == exclude.end()) return f;
    }
}

} // namespace prosim
