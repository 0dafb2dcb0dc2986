#pragma once

#include <cstdint>
#include <string>

#include "hemocyte/image.hpp"

namespace hemocyte {

// Procedural stained-smear lookalikes for tests and demos: pale background,
// red-cell rings and platelets to distract the segmenter, plus one white cell
// whose nuclear shape follows the class conventions (solid round nucleus,
// kidney form, multi-lobed, bilobed with granules). Colors are placed so the
// default RGB thresholds pick up exactly the nuclear material.
//
// Class labels follow canonical_class_names() order:
// 0 eosinophil, 1 lymphocyte, 2 monocyte, 3 neutrophil.

struct SynthBox {
  int xmin = 0, ymin = 0, xmax = 0, ymax = 0;
};

// 320x240 RGB canvas; identical (label, seed) pairs render identical images.
Image synth_smear(int class_label, std::uint64_t seed);

// Same, also reporting the tight bounding box of the in-threshold cell body.
Image synth_smear_boxed(int class_label, std::uint64_t seed, SynthBox* box_out);

// Writes root/<CLASS>/<class>-NNNN.png for all four classes.
void write_synthetic_dataset(const std::string& root, int per_class, std::uint64_t seed);

// Writes dir/sample-NNNN.png plus a matching detection-annotation XML with a
// single WBC bounding box; classes cycle through the four labels.
void write_synthetic_annotated(const std::string& dir, int count, std::uint64_t seed);

}  // namespace hemocyte
