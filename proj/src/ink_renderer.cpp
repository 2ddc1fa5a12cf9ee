#include "rxnkit/ink_renderer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

namespace rxnkit::render {

namespace {

// 5x7 glyphs for ASCII 0x20..0x7E, one byte per column, bit 0 = top row.
constexpr std::array<std::array<std::uint8_t, 5>, 95> kFont = {{
    {0x00, 0x00, 0x00, 0x00, 0x00}, {0x00, 0x00, 0x5F, 0x00, 0x00}, {0x00, 0x07, 0x00, 0x07, 0x00},
    {0x14, 0x7F, 0x14, 0x7F, 0x14}, {0x24, 0x2A, 0x7F, 0x2A, 0x12}, {0x23, 0x13, 0x08, 0x64, 0x62},
    {0x36, 0x49, 0x55, 0x22, 0x50}, {0x00, 0x05, 0x03, 0x00, 0x00}, {0x00, 0x1C, 0x22, 0x41, 0x00},
    {0x00, 0x41, 0x22, 0x1C, 0x00}, {0x08, 0x2A, 0x1C, 0x2A, 0x08}, {0x08, 0x08, 0x3E, 0x08, 0x08},
    {0x00, 0x50, 0x30, 0x00, 0x00}, {0x08, 0x08, 0x08, 0x08, 0x08}, {0x00, 0x60, 0x60, 0x00, 0x00},
    {0x20, 0x10, 0x08, 0x04, 0x02}, {0x3E, 0x51, 0x49, 0x45, 0x3E}, {0x00, 0x42, 0x7F, 0x40, 0x00},
    {0x42, 0x61, 0x51, 0x49, 0x46}, {0x21, 0x41, 0x45, 0x4B, 0x31}, {0x18, 0x14, 0x12, 0x7F, 0x10},
    {0x27, 0x45, 0x45, 0x45, 0x39}, {0x3C, 0x4A, 0x49, 0x49, 0x30}, {0x01, 0x71, 0x09, 0x05, 0x03},
    {0x36, 0x49, 0x49, 0x49, 0x36}, {0x06, 0x49, 0x49, 0x29, 0x1E}, {0x00, 0x36, 0x36, 0x00, 0x00},
    {0x00, 0x56, 0x36, 0x00, 0x00}, {0x08, 0x14, 0x22, 0x41, 0x00}, {0x14, 0x14, 0x14, 0x14, 0x14},
    {0x00, 0x41, 0x22, 0x14, 0x08}, {0x02, 0x01, 0x51, 0x09, 0x06}, {0x32, 0x49, 0x79, 0x41, 0x3E},
    {0x7E, 0x11, 0x11, 0x11, 0x7E}, {0x7F, 0x49, 0x49, 0x49, 0x36}, {0x3E, 0x41, 0x41, 0x41, 0x22},
    {0x7F, 0x41, 0x41, 0x22, 0x1C}, {0x7F, 0x49, 0x49, 0x49, 0x41}, {0x7F, 0x09, 0x09, 0x09, 0x01},
    {0x3E, 0x41, 0x49, 0x49, 0x7A}, {0x7F, 0x08, 0x08, 0x08, 0x7F}, {0x00, 0x41, 0x7F, 0x41, 0x00},
    {0x20, 0x40, 0x41, 0x3F, 0x01}, {0x7F, 0x08, 0x14, 0x22, 0x41}, {0x7F, 0x40, 0x40, 0x40, 0x40},
    {0x7F, 0x02, 0x0C, 0x02, 0x7F}, {0x7F, 0x04, 0x08, 0x10, 0x7F}, {0x3E, 0x41, 0x41, 0x41, 0x3E},
    {0x7F, 0x09, 0x09, 0x09, 0x06}, {0x3E, 0x41, 0x51, 0x21, 0x5E}, {0x7F, 0x09, 0x19, 0x29, 0x46},
    {0x46, 0x49, 0x49, 0x49, 0x31}, {0x01, 0x01, 0x7F, 0x01, 0x01}, {0x3F, 0x40, 0x40, 0x40, 0x3F},
    {0x1F, 0x20, 0x40, 0x20, 0x1F}, {0x3F, 0x40, 0x38, 0x40, 0x3F}, {0x63, 0x14, 0x08, 0x14, 0x63},
    {0x07, 0x08, 0x70, 0x08, 0x07}, {0x61, 0x51, 0x49, 0x45, 0x43}, {0x00, 0x7F, 0x41, 0x41, 0x00},
    {0x02, 0x04, 0x08, 0x10, 0x20}, {0x00, 0x41, 0x41, 0x7F, 0x00}, {0x04, 0x02, 0x01, 0x02, 0x04},
    {0x40, 0x40, 0x40, 0x40, 0x40}, {0x00, 0x01, 0x02, 0x04, 0x00}, {0x20, 0x54, 0x54, 0x54, 0x78},
    {0x7F, 0x48, 0x44, 0x44, 0x38}, {0x38, 0x44, 0x44, 0x44, 0x20}, {0x38, 0x44, 0x44, 0x48, 0x7F},
    {0x38, 0x54, 0x54, 0x54, 0x18}, {0x08, 0x7E, 0x09, 0x01, 0x02}, {0x0C, 0x52, 0x52, 0x52, 0x3E},
    {0x7F, 0x08, 0x04, 0x04, 0x78}, {0x00, 0x44, 0x7D, 0x40, 0x00}, {0x20, 0x40, 0x44, 0x3D, 0x00},
    {0x7F, 0x10, 0x28, 0x44, 0x00}, {0x00, 0x41, 0x7F, 0x40, 0x00}, {0x7C, 0x04, 0x18, 0x04, 0x78},
    {0x7C, 0x08, 0x04, 0x04, 0x78}, {0x38, 0x44, 0x44, 0x44, 0x38}, {0x7C, 0x14, 0x14, 0x14, 0x08},
    {0x08, 0x14, 0x14, 0x18, 0x7C}, {0x7C, 0x08, 0x04, 0x04, 0x08}, {0x48, 0x54, 0x54, 0x54, 0x20},
    {0x04, 0x3F, 0x44, 0x40, 0x20}, {0x3C, 0x40, 0x40, 0x20, 0x7C}, {0x1C, 0x20, 0x40, 0x20, 0x1C},
    {0x3C, 0x40, 0x30, 0x40, 0x3C}, {0x44, 0x28, 0x10, 0x28, 0x44}, {0x0C, 0x50, 0x50, 0x50, 0x3C},
    {0x44, 0x64, 0x54, 0x4C, 0x44}, {0x00, 0x08, 0x36, 0x41, 0x00}, {0x00, 0x00, 0x7F, 0x00, 0x00},
    {0x00, 0x41, 0x36, 0x08, 0x00}, {0x08, 0x04, 0x08, 0x10, 0x08},
}};

constexpr int kCellWidth = 5;
constexpr int kAdvance = 6;
constexpr int kCellHeight = 7;

/// Maps UTF-8 text to glyph indices; primes become apostrophes, anything
/// else outside printable ASCII becomes '?'.
std::vector<std::size_t> glyphs(std::string_view text) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      out.push_back(c >= 0x20 && c < 0x7F ? c - 0x20u : '?' - 0x20u);
      ++i;
      continue;
    }
    std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
    const std::string_view seq = text.substr(i, len);
    out.push_back(seq == "′" || seq == "’" ? '\'' - 0x20u : '?' - 0x20u);
    i += len;
  }
  return out;
}

int base_width(std::size_t n_glyphs, int h) {
  const long units = static_cast<long>(n_glyphs) * kAdvance - 1;
  return static_cast<int>((units * h + kCellHeight - 1) / kCellHeight);
}

bool in_bounds(const Rect& r, int w, int h) { return r.x0 >= 0 && r.y0 >= 0 && r.x1 <= w && r.y1 <= h; }

bool acceptable(const Rect& r, const InkMap& ink, const std::vector<Box>& occupied, double threshold,
                double& fraction) {
  if (!in_bounds(r, ink.width(), ink.height())) return false;
  for (const auto& b : occupied) {
    if (intersects(r, b)) return false;
  }
  fraction = ink.fraction(r);
  return fraction <= threshold;
}

Rect at(int x0, int y0, int w, int h) { return Rect{x0, y0, x0 + w, y0 + h}; }

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

Box box_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4) throw ParseError(path, "expected [x1, y1, x2, y2]");
  Box b;
  double* fields[] = {&b.x1, &b.y1, &b.x2, &b.y2};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number()) throw ParseError(path, "box coordinates must be numbers");
    *fields[i] = j[i].get<double>();
  }
  if (!b.valid()) throw ParseError(path, "degenerate box");
  return b;
}

int mol_index_from_json(const json& j, const std::string& path) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (!s.empty() && s.size() < 10 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::stoi(s);
    }
  }
  throw ParseError(path, "mol_index must be an integer");
}

}  // namespace

void RenderConfig::validate() const {
  if (!(ink_threshold >= 0.0 && ink_threshold <= 1.0)) throw std::invalid_argument("ink threshold must lie in [0, 1]");
  if (ink_delta < 0 || ink_delta > 255) throw std::invalid_argument("ink delta must lie in [0, 255]");
  if (min_glyph < 1 || max_default_glyph < min_glyph) throw std::invalid_argument("invalid glyph height bounds");
  if (!(spiral_scale > 0.0 && spiral_scale < 1.0)) throw std::invalid_argument("spiral scale must lie in (0, 1)");
  if (spiral_step < 1) throw std::invalid_argument("spiral step must be positive");
  if (!(spiral_radius_factor >= 0.0)) throw std::invalid_argument("spiral radius factor must be non-negative");
}

bool intersects(const Rect& r, const Box& b) {
  return std::min<double>(r.x1, b.x2) > std::max<double>(r.x0, b.x1) &&
         std::min<double>(r.y1, b.y2) > std::max<double>(r.y0, b.y1);
}

Rect measure_text(std::string_view text, const FontSpec& font) {
  const auto n = glyphs(text).size();
  if (n == 0) return Rect{};
  const int w = base_width(n, font.glyph_height) + (font.stroke == Stroke::bold ? 1 : 0);
  return Rect{0, 0, w, font.glyph_height};
}

void draw_text(Image& img, int x, int y, std::string_view text, const FontSpec& font) {
  const auto g = glyphs(text);
  if (g.empty()) return;
  const int h = font.glyph_height;
  const int w = base_width(g.size(), h);
  const int passes = font.stroke == Stroke::bold ? 2 : 1;
  const int color_channels = img.channels == 2 || img.channels == 4 ? img.channels - 1 : img.channels;
  for (int py = 0; py < h; ++py) {
    const int fy = py * kCellHeight / h;
    for (int px = 0; px < w; ++px) {
      const int fx = px * kCellHeight / h;
      const int col = fx % kAdvance;
      const std::size_t ch = static_cast<std::size_t>(fx / kAdvance);
      if (col >= kCellWidth || ch >= g.size() || !((kFont[g[ch]][col] >> fy) & 1)) continue;
      for (int pass = 0; pass < passes; ++pass) {
        const int tx = x + px + pass;
        const int ty = y + py;
        if (tx < 0 || ty < 0 || tx >= img.width || ty >= img.height) continue;
        std::uint8_t* p = img.pixel(tx, ty);
        for (int c = 0; c < color_channels; ++c) p[c] = font.color;
        if (color_channels != img.channels) p[img.channels - 1] = 255;
      }
    }
  }
}

FontSpec infer_label_style(const std::vector<Box>& existing_labels, const std::vector<Box>& molecules,
                           const RenderConfig& config) {
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  FontSpec spec;
  if (!existing_labels.empty()) {
    std::vector<double> heights;
    for (const auto& b : existing_labels) heights.push_back(b.y2 - b.y1);
    spec.glyph_height = std::max(config.min_glyph, round_half_up(median(heights)));
  } else if (!molecules.empty()) {
    std::vector<double> heights;
    for (const auto& b : molecules) heights.push_back(b.y2 - b.y1);
    spec.glyph_height = std::clamp(round_half_up(config.default_glyph_ratio * median(heights)), config.min_glyph,
                                   config.max_default_glyph);
  } else {
    spec.glyph_height = config.min_glyph;
  }
  return spec;
}

InkMap::InkMap(const GrayImage& gray, int ink_delta) : width_(gray.width), height_(gray.height) {
  std::array<std::size_t, 256> hist{};
  for (auto v : gray.data) ++hist[v];
  background_ = 255;
  for (int v = 255; v >= 0; --v) {
    if (hist[static_cast<std::size_t>(v)] > hist[static_cast<std::size_t>(background_)]) background_ = v;
  }
  const int cutoff = background_ - ink_delta;
  mask_.resize(gray.data.size());
  integral_.assign(static_cast<std::size_t>(width_ + 1) * (height_ + 1), 0);
  const auto W = static_cast<std::size_t>(width_ + 1);
  for (int y = 0; y < height_; ++y) {
    std::int64_t row = 0;
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
      mask_[i] = gray.data[i] < cutoff ? 1 : 0;
      row += mask_[i];
      integral_[(y + 1) * W + (x + 1)] = integral_[y * W + (x + 1)] + row;
    }
  }
}

bool InkMap::ink(int x, int y) const { return mask_[static_cast<std::size_t>(y) * width_ + x] != 0; }

std::int64_t InkMap::count(const Rect& r) const {
  const auto W = static_cast<std::size_t>(width_ + 1);
  const auto I = [&](int x, int y) { return integral_[static_cast<std::size_t>(y) * W + static_cast<std::size_t>(x)]; };
  return I(r.x1, r.y1) - I(r.x0, r.y1) - I(r.x1, r.y0) + I(r.x0, r.y0);
}

double InkMap::fraction(const Rect& r) const {
  const std::int64_t area = static_cast<std::int64_t>(r.width()) * r.height();
  return area <= 0 ? 0.0 : static_cast<double>(count(r)) / static_cast<double>(area);
}

std::string_view to_string(Method m) {
  return m == Method::priority_slot ? "priority_slot" : "spiral_fallback";
}

std::vector<Rect> priority_slots(const Box& t, int tw, int th, int pad) {
  const int cx = round_half_up((t.x1 + t.x2) / 2.0 - tw / 2.0);
  const int cy = round_half_up((t.y1 + t.y2) / 2.0 - th / 2.0);
  const int below = static_cast<int>(std::ceil(t.y2)) + pad;
  const int above = static_cast<int>(std::floor(t.y1)) - pad - th;
  const int right = static_cast<int>(std::ceil(t.x2)) + pad;
  const int left = static_cast<int>(std::floor(t.x1)) - pad - tw;
  return {at(cx, below, tw, th),   at(cx, above, tw, th),    at(right, cy, tw, th),
          at(left, cy, tw, th),    at(right, below, tw, th), at(left, below, tw, th),
          at(right, above, tw, th), at(left, above, tw, th)};
}

std::vector<std::pair<int, int>> spiral_ring(int r, int step) {
  if (r == 0) return {{0, 0}};
  std::vector<std::pair<int, int>> out;
  for (int x = -r; x <= r; x += step) out.emplace_back(x, -r);
  for (int y = -r + step; y <= r; y += step) out.emplace_back(r, y);
  for (int x = r - step; x >= -r; x -= step) out.emplace_back(x, r);
  for (int y = r - step; y > -r; y -= step) out.emplace_back(-r, y);
  return out;
}

std::vector<int> fallback_heights(int glyph_height, const RenderConfig& config) {
  std::vector<int> out;
  const int start = std::max(glyph_height, config.min_glyph);
  for (int k = 0;; ++k) {
    int h = round_half_up(start * std::pow(config.spiral_scale, k));
    const bool last = h <= config.min_glyph;
    h = std::max(h, config.min_glyph);
    if (out.empty() || out.back() != h) out.push_back(h);
    if (last) break;
  }
  return out;
}

std::optional<Placement> spiral_fallback(const InkMap& ink, const Box& target, std::string_view text,
                                         const FontSpec& font, const std::vector<Box>& occupied,
                                         const RenderConfig& config) {
  const double cx = (target.x1 + target.x2) / 2.0;
  const double cy = (target.y1 + target.y2) / 2.0;
  const double radius = config.spiral_radius_factor * std::hypot(target.x2 - target.x1, target.y2 - target.y1);
  for (int h : fallback_heights(font.glyph_height, config)) {
    FontSpec scaled = font;
    scaled.glyph_height = h;
    const Rect size = measure_text(text, scaled);
    if (size.width() <= 0) return std::nullopt;
    for (int r = 0; r <= radius; r += config.spiral_step) {
      for (const auto& [dx, dy] : spiral_ring(r, config.spiral_step)) {
        const Rect rect = at(round_half_up(cx + dx - size.width() / 2.0), round_half_up(cy + dy - h / 2.0),
                             size.width(), h);
        double fraction = 0.0;
        if (acceptable(rect, ink, occupied, config.ink_threshold, fraction)) {
          return Placement{0, std::string(text), rect.box(), Method::spiral_fallback, fraction, h, -1};
        }
      }
    }
  }
  return std::nullopt;
}

std::optional<Placement> place_identifier(const InkMap& ink, const Box& target, std::string_view text,
                                          const FontSpec& font, const std::vector<Box>& occupied,
                                          const RenderConfig& config) {
  const Rect size = measure_text(text, font);
  if (size.width() <= 0) return std::nullopt;
  const auto slots = priority_slots(target, size.width(), size.height(), font.glyph_height);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    double fraction = 0.0;
    if (acceptable(slots[i], ink, occupied, config.ink_threshold, fraction)) {
      return Placement{0, std::string(text), slots[i].box(), Method::priority_slot, fraction, font.glyph_height,
                       static_cast<int>(i)};
    }
  }
  return spiral_fallback(ink, target, text, font, occupied, config);
}

RenderResult render_all(const Image& image, const std::vector<MoleculeBox>& molecules,
                        const std::vector<Box>& existing_labels, const std::vector<DrawRequest>& to_draw,
                        const RenderConfig& config) {
  config.validate();
  const InkMap ink(to_gray(image), config.ink_delta);
  std::vector<Box> boxes;
  std::map<int, Box> by_index;
  for (const auto& m : molecules) {
    boxes.push_back(m.bbox);
    by_index.emplace(m.mol_index, m.bbox);
  }
  RenderResult out;
  out.image = image;
  out.font = infer_label_style(existing_labels, boxes, config);

  std::vector<Box> occupied = boxes;
  occupied.insert(occupied.end(), existing_labels.begin(), existing_labels.end());
  for (const auto& req : to_draw) {
    auto it = by_index.find(req.mol_index);
    if (it == by_index.end()) {
      out.errors.push_back({req.mol_index, req.text, "unknown mol_index"});
      continue;
    }
    if (glyphs(req.text).empty()) {
      out.errors.push_back({req.mol_index, req.text, "empty identifier text"});
      continue;
    }
    auto placed = place_identifier(ink, it->second, req.text, out.font, occupied, config);
    if (!placed) {
      out.errors.push_back({req.mol_index, req.text, "placement_impossible"});
      continue;
    }
    placed->mol_index = req.mol_index;
    occupied.push_back(placed->anchor);
    out.placements.push_back(std::move(*placed));
  }
  for (const auto& p : out.placements) {
    FontSpec f = out.font;
    f.glyph_height = p.glyph_height;
    draw_text(out.image, static_cast<int>(p.anchor.x1), static_cast<int>(p.anchor.y1), p.text, f);
  }
  return out;
}

std::vector<RenderJob> read_manifest(std::istream& in) {
  std::vector<RenderJob> jobs;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string at_line = "line " + std::to_string(n);
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(at_line, "not a JSON object");
    RenderJob job;
    if (!j.contains("image_id") || !j["image_id"].is_string()) throw ParseError(at_line, "missing image_id");
    job.image_id = j["image_id"].get<std::string>();
    if (j.contains("image")) {
      if (!j["image"].is_string()) throw ParseError(at_line + ".image", "must be a path string");
      job.image = j["image"].get<std::string>();
    }
    const json empty = json::array();
    const json& mols = j.contains("molecules") ? j["molecules"] : empty;
    const json& labels = j.contains("existing_labels") ? j["existing_labels"] : empty;
    const json& draw = j.contains("draw") ? j["draw"] : empty;
    if (!mols.is_array() || !labels.is_array() || !draw.is_array()) {
      throw ParseError(at_line, "molecules, existing_labels and draw must be arrays");
    }
    for (std::size_t i = 0; i < mols.size(); ++i) {
      const std::string p = at_line + ".molecules[" + std::to_string(i) + "]";
      if (!mols[i].is_object() || !mols[i].contains("mol_index") || !mols[i].contains("bbox")) {
        throw ParseError(p, "needs mol_index and bbox");
      }
      job.molecules.push_back({mol_index_from_json(mols[i]["mol_index"], p), box_from_json(mols[i]["bbox"], p)});
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      job.existing_labels.push_back(box_from_json(labels[i], at_line + ".existing_labels[" + std::to_string(i) + "]"));
    }
    for (std::size_t i = 0; i < draw.size(); ++i) {
      const std::string p = at_line + ".draw[" + std::to_string(i) + "]";
      if (!draw[i].is_object() || !draw[i].contains("mol_index") || !draw[i].contains("text") ||
          !draw[i]["text"].is_string()) {
        throw ParseError(p, "needs mol_index and text");
      }
      job.draw.push_back({mol_index_from_json(draw[i]["mol_index"], p), draw[i]["text"].get<std::string>()});
    }
    jobs.push_back(std::move(job));
  }
  return jobs;
}

json to_json(const Placement& p) {
  json out{{"mol_index", p.mol_index},
           {"text", p.text},
           {"anchor", {p.anchor.x1, p.anchor.y1, p.anchor.x2, p.anchor.y2}},
           {"method", to_string(p.method)},
           {"ink_fraction_under", p.ink_fraction_under},
           {"glyph_height", p.glyph_height}};
  if (p.slot >= 0) out["slot"] = p.slot;
  return out;
}

json manifest_entry(const std::string& image_id, const RenderResult& r) {
  json placements = json::array();
  for (const auto& p : r.placements) placements.push_back(to_json(p));
  json errors = json::array();
  for (const auto& e : r.errors) errors.push_back({{"mol_index", e.mol_index}, {"text", e.text}, {"error", e.error}});
  return json{{"image_id", image_id},
              {"glyph_height", r.font.glyph_height},
              {"placements", std::move(placements)},
              {"errors", std::move(errors)}};
}

}  // namespace rxnkit::render
