#include "prosim/forms.hpp"

#include <cctype>
#include <utility>

#include "prosim/error.hpp"

namespace prosim {

namespace {

constexpr std::string_view kSlotNames[kSlotCount] = {"subject", "object", "poss-det",
                                                     "poss-indep", "reflexive"};

// Cells may not contain whitespace or the characters that structure the
// spec grammar and the log format.
bool valid_cell_char(char c) {
    if (std::isspace(static_cast<unsigned char>(c))) return false;
    switch (c) {
        case '/':
        case ':':
        case ',':
        case '=':
            return false;
        default:
            return true;
    }
}

void check_cell(std::string_view cell, std::string_view what) {
    if (cell.empty())
        throw ValidationError("form cell '" + std::string(what) + "' is empty");
    for (char c : cell) {
        if (!valid_cell_char(c))
            throw ValidationError("form cell '" + std::string(what) + "' contains forbidden character '" +
                                  std::string(1, c) + "' in \"" + std::string(cell) + "\"");
    }
}

} // namespace

std::string_view slot_name(GrammaticalSlot slot) {
    return kSlotNames[static_cast<int>(slot)];
}

GrammaticalSlot parse_slot(std::string_view name) {
    for (int i = 0; i < kSlotCount; ++i) {
        if (name == kSlotNames[i]) return static_cast<GrammaticalSlot>(i);
    }
    throw ParseError("unknown grammatical slot \"" + std::string(name) + "\"");
}

Form::Form(FormKind kind, std::vector<std::string> cells)
    : kind_(kind), cells_(std::move(cells)) {
    switch (kind_) {
        case FormKind::pronoun_paradigm: {
            spec_.clear();
            for (size_t i = 0; i < cells_.size(); ++i) {
                if (i) spec_ += '/';
                spec_ += cells_[i];
            }
            break;
        }
        case FormKind::name:
            spec_ = "name:" + cells_[0];
            break;
        case FormKind::no_pronoun:
            spec_ = "none";
            break;
    }
}

Form Form::paradigm(std::array<std::string, 5> cells) {
    std::vector<std::string> v;
    v.reserve(5);
    for (int i = 0; i < 5; ++i) {
        check_cell(cells[i], kSlotNames[i]);
        v.push_back(std::move(cells[i]));
    }
    return Form(FormKind::pronoun_paradigm, std::move(v));
}

Form Form::name(std::string n) {
    check_cell(n, "name");
    return Form(FormKind::name, {std::move(n)});
}

Form Form::no_pronoun() { return Form(FormKind::no_pronoun, {}); }

Form parse_form_spec(std::string_view text) {
    if (text == "none") return Form::no_pronoun();
    if (text.rfind("name:", 0) == 0) {
        std::string_view n = text.substr(5);
        if (n.empty()) throw ParseError("form spec \"" + std::string(text) + "\": empty name segment");
        return Form::name(std::string(n));
    }
    // Split on '/' and require exactly 5 segments.
    std::vector<std::string> segs;
    size_t start = 0;
    for (;;) {
        size_t pos = text.find('/', start);
        if (pos == std::string_view::npos) {
            segs.emplace_back(text.substr(start));
            break;
        }
        segs.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    if (segs.size() != 5)
        throw ParseError("form spec \"" + std::string(text) + "\": expected 5 paradigm cells, got " +
                         std::to_string(segs.size()));
    for (size_t i = 0; i < 5; ++i) {
        if (segs[i].empty())
            throw ParseError("form spec \"" + std::string(text) + "\": cell " +
                             std::string(kSlotNames[i]) + " is empty");
    }
    std::array<std::string, 5> cells;
    for (size_t i = 0; i < 5; ++i) cells[i] = std::move(segs[i]);
    return Form::paradigm(std::move(cells));
}

std::string realize(const Form& form, GrammaticalSlot slot, std::string_view referent_name) {
    const bool possessive =
        slot == GrammaticalSlot::poss_det || slot == GrammaticalSlot::poss_indep;
    switch (form.kind()) {
        case FormKind::pronoun_paradigm:
            return form.cells()[static_cast<int>(slot)];
        case FormKind::name: {
            const std::string& n = form.cells()[0];
            return possessive ? n + "'s" : n;
        }
        case FormKind::no_pronoun: {
            if (referent_name.empty())
                throw ValidationError("no-pronoun form requires a referent name to realize");
            std::string n(referent_name);
            return possessive ? n + "'s" : n;
        }
    }
    throw ConsistencyError("unreachable form kind");
}

Form make_paradigm(std::string_view spec_like) { return parse_form_spec(spec_like); }

} // namespace prosim
