#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rxnkit/raster.hpp"
#include "rxnkit/reaction_model.hpp"

namespace rxnkit::render {

struct RenderConfig {
  /// Maximum fraction of ink pixels under a text rect.
  double ink_threshold = 0.01;
  /// A pixel is ink when it is this many levels darker than the background.
  int ink_delta = 48;
  int min_glyph = 8;
  int max_default_glyph = 48;
  double default_glyph_ratio = 0.12;
  double spiral_scale = 0.85;
  int spiral_step = 2;
  double spiral_radius_factor = 3.0;

  void validate() const;
};

enum class Stroke { normal, bold };

struct FontSpec {
  int glyph_height = 12;
  Stroke stroke = Stroke::bold;
  std::uint8_t color = 0;

  friend bool operator==(const FontSpec&, const FontSpec&) = default;
};

/// Integer pixel rect, half-open: [x0, x1) x [y0, y1).
struct Rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  Box box() const { return Box{double(x0), double(y0), double(x1), double(y1)}; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Positive-area overlap between a text rect and a box.
bool intersects(const Rect& r, const Box& b);

/// Size of the rect `text` occupies when drawn with `font`.
Rect measure_text(std::string_view text, const FontSpec& font);

/// Draws `text` with its top-left corner at (x, y). Pixels outside the image
/// are clipped. Every channel except alpha takes the font color.
void draw_text(Image& img, int x, int y, std::string_view text, const FontSpec& font);

/// Glyph height from existing label boxes (median), or from molecule boxes
/// when there are no labels.
FontSpec infer_label_style(const std::vector<Box>& existing_labels, const std::vector<Box>& molecules,
                           const RenderConfig& config = {});

/// Ink mask of a grayscale raster with O(1) rectangle counts.
class InkMap {
 public:
  InkMap(const GrayImage& gray, int ink_delta);

  int width() const { return width_; }
  int height() const { return height_; }
  int background() const { return background_; }
  bool ink(int x, int y) const;
  std::int64_t count(const Rect& r) const;
  double fraction(const Rect& r) const;

 private:
  int width_ = 0;
  int height_ = 0;
  int background_ = 255;
  std::vector<std::uint8_t> mask_;
  std::vector<std::int64_t> integral_;
};

enum class Method { priority_slot, spiral_fallback };
std::string_view to_string(Method m);

struct Placement {
  int mol_index = 0;
  std::string text;
  Box anchor;
  Method method = Method::priority_slot;
  double ink_fraction_under = 0.0;
  int glyph_height = 0;
  /// Index into the priority slot list, or -1 for spiral placements.
  int slot = -1;
};

/// Candidate slot rects in priority order: below, above, right, left, then
/// bottom-right, bottom-left, top-right, top-left.
std::vector<Rect> priority_slots(const Box& target, int text_width, int text_height, int pad);

/// Offsets of one spiral ring at Chebyshev radius r (a multiple of step),
/// in scan order. Ring 0 is the single offset (0, 0).
std::vector<std::pair<int, int>> spiral_ring(int r, int step);

/// Font heights tried by the fallback: h, h*s, h*s^2, ... down to min_glyph.
std::vector<int> fallback_heights(int glyph_height, const RenderConfig& config);

/// Priority slots first, then the spiral fallback. nullopt means placement
/// is impossible.
std::optional<Placement> place_identifier(const InkMap& ink, const Box& target, std::string_view text,
                                          const FontSpec& font, const std::vector<Box>& occupied,
                                          const RenderConfig& config = {});

std::optional<Placement> spiral_fallback(const InkMap& ink, const Box& target, std::string_view text,
                                         const FontSpec& font, const std::vector<Box>& occupied,
                                         const RenderConfig& config = {});

struct MoleculeBox {
  int mol_index = 0;
  Box bbox;
};

struct DrawRequest {
  int mol_index = 0;
  std::string text;
};

struct RenderError {
  int mol_index = 0;
  std::string text;
  std::string error;
};

struct RenderResult {
  Image image;
  FontSpec font;
  std::vector<Placement> placements;
  std::vector<RenderError> errors;
};

/// Places and stamps every requested identifier in order. Ink checks use the
/// original image; each placement is added to the occupied set.
RenderResult render_all(const Image& image, const std::vector<MoleculeBox>& molecules,
                        const std::vector<Box>& existing_labels, const std::vector<DrawRequest>& to_draw,
                        const RenderConfig& config = {});

struct RenderJob {
  std::string image_id;
  std::optional<std::string> image;
  std::vector<MoleculeBox> molecules;
  std::vector<Box> existing_labels;
  std::vector<DrawRequest> draw;
};

/// Manifest lines {image_id, image?, molecules, existing_labels, draw}.
std::vector<RenderJob> read_manifest(std::istream& in);
json to_json(const Placement& p);
json manifest_entry(const std::string& image_id, const RenderResult& r);

}  // namespace rxnkit::render
