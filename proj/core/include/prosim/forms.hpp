#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace prosim {

// The five surface slots of an English third-person paradigm.
enum class GrammaticalSlot : std::uint8_t {
    subject = 0,
    object = 1,
    poss_det = 2,   // "their book"
    poss_indep = 3, // "the book is theirs"
    reflexive = 4,
};

inline constexpr int kSlotCount = 5;

std::string_view slot_name(GrammaticalSlot slot);
GrammaticalSlot parse_slot(std::string_view name);

enum class FormKind : std::uint8_t {
    pronoun_paradigm, // 5 surface cells
    name,             // a single surface string, possessives derived
    no_pronoun,       // explicit no-pronoun preference; realization uses the name
};

// A referring paradigm: the atomic dish every restaurant serves. Immutable;
// equality and ordering go through the canonical spec string, so forms are
// usable as deterministic map keys everywhere (snapshots included).
class Form {
public:
    static Form paradigm(std::array<std::string, 5> cells);
    static Form name(std::string n);
    static Form no_pronoun();

    FormKind kind() const { return kind_; }
    const std::vector<std::string>& cells() const { return cells_; }

    // Canonical spec: "a/b/c/d/e", "name:X", or "none".
    const std::string& spec() const { return spec_; }

    bool operator==(const Form& o) const { return spec_ == o.spec_; }
    bool operator!=(const Form& o) const { return spec_ != o.spec_; }
    bool operator<(const Form& o) const { return spec_ < o.spec_; }

private:
    Form(FormKind kind, std::vector<std::string> cells);

    FormKind kind_;
    std::vector<std::string> cells_; // 5 for paradigm, 1 for name, 0 for none
    std::string spec_;
};

// Parses "a/b/c/d/e", "name:X", or "none". Errors name the offending
// segment. parse(format(f)) == f for every valid form.
Form parse_form_spec(std::string_view text);

inline std::string format_form_spec(const Form& f) { return f.spec(); }

// Surface realization of a form in a slot. Total over valid inputs:
// paradigms pick the matching cell, names and no-pronoun fall back to the
// referent's name with "'s" appended in possessive slots.
std::string realize(const Form& form, GrammaticalSlot slot, std::string_view referent_name);

// Convenience builders for the conventional English inventory.
Form make_paradigm(std::string_view spec_like); // "they/them/their/theirs/themself"

} // namespace prosim
