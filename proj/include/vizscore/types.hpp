#pragma once

// Shared label/corpus types used across labeling, training, and evaluation.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vizscore/core.hpp"

namespace vizscore {

enum class Label { visual, non_visual };

inline const char* to_string(Label l) { return l == Label::visual ? "visual" : "non-visual"; }

inline Label label_from_string(const std::string& s) {
    if (s == "visual") return Label::visual;
    if (s == "non-visual") return Label::non_visual;
    throw parse_error("BadLabel", "unknown label '" + s + "'");
}

// One training/evaluation sentence. Visual examples carry the id of their
// paired image; non-visual examples carry the NULL marker (empty optional).
struct LabeledExample {
    std::string text;
    Label label = Label::non_visual;
    std::optional<std::string> image_id;

    bool consistent() const { return (label == Label::visual) == image_id.has_value(); }
};

// image_id -> feature vector; ordered so serialization is deterministic.
using ImageBank = std::map<std::string, RawVector>;

}  // namespace vizscore
