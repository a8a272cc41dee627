#pragma once

#include <string>
#include <utility>
#include <vector>

#include "prosim/forms.hpp"
#include "prosim/rng.hpp"

namespace prosim {

// Base measure over the open form space: a weighted finite seed inventory
// mixed with mass eta of a character-level string model, so every possible
// paradigm or name keeps positive prior probability.
struct LexiconConfig {
    std::vector<std::pair<Form, double>> seed_forms; // weights > 0, normalized on validate()
    double novelty_mass = 0.05;                      // eta in [0, 1)
    std::string char_alphabet = "abcdefghijklmnopqrstuvwxyz";
    double length_continue_prob = 0.3; // p in (0, 1)

    // Normalizes seed weights and checks ranges; throws ValidationError.
    void validate_and_normalize();

    // Conventional inventory: he .45 / she .45 / they .10.
    static LexiconConfig defaults();
};

// Probability of one cell string under the geometric-length, uniform-character
// model: (1-p) p^{len-1} |A|^{-len}. Zero if any character is outside the
// alphabet. Sums to 1 over all strings drawn from the alphabet.
double cell_string_score(std::string_view cell, const LexiconConfig& cfg);

// String-model score of a whole form: product over cells (5 for a paradigm,
// 1 for a name). NoPronoun is a closed-class form and carries no novelty
// mass; it reaches restaurants through seeding or declarations.
double string_model_score(const Form& form, const LexiconConfig& cfg);

// Score under the full base measure:
//   (1-eta) * seed_weight(form) + eta * string_model_score(form).
double base_measure_score(const Form& form, const LexiconConfig& cfg);

// Samples a novel form from the string model (paradigm or name, equal odds),
// rejecting anything that collides with `exclude`. Used when a draw lands in
// the residual novel-form mass.
Form sample_novel_form(const LexiconConfig& cfg, Rng& rng, const std::vector<Form>& exclude);

} // namespace prosim
