#include "psim/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace psim {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

double SourceSpec::coherence_length_for(double lambda0_nm, double delta_lambda_nm) {
  return (2.0 * std::numbers::ln2 / std::numbers::pi) * lambda0_nm * lambda0_nm / delta_lambda_nm;
}

SourceSpec SourceSpec::make(double lambda0_nm, double delta_lambda_nm) {
  SourceSpec s{lambda0_nm, delta_lambda_nm, 0.0};
  require(lambda0_nm > 0, "source.lambda0 must be > 0");
  require(delta_lambda_nm > 0, "source.delta_lambda must be > 0");
  s.coherence_length = coherence_length_for(lambda0_nm, delta_lambda_nm);
  return s;
}

void SourceSpec::validate() const {
  require(std::isfinite(lambda0) && lambda0 > 0, "source.lambda0 must be > 0");
  require(std::isfinite(delta_lambda) && delta_lambda > 0, "source.delta_lambda must be > 0");
  const double expected = coherence_length_for(lambda0, delta_lambda);
  require(std::abs(coherence_length - expected) <= 1e-9 * expected,
          "source.coherence_length inconsistent with lambda0 and delta_lambda");
}

void PhaseObjectSpec::validate() const {
  switch (kind) {
    case ObjectKind::flat:
      break;
    case ObjectKind::waveguide_ridge:
      require(ridge.height >= 0, "ridge.height must be >= 0");
      require(ridge.width >= 1, "ridge.width must be >= 1 px");
      require(ridge.edge >= 0, "ridge.edge must be >= 0");
      break;
    case ObjectKind::cell_blobs:
      for (const auto& b : blobs) {
        require(b.peak_height >= 0, "blobs.peak_height must be >= 0");
        require(b.radius >= 1, "blobs.radius must be >= 1 px");
      }
      break;
  }
}

void ForwardModelSpec::validate() const {
  source.validate();
  require(std::isfinite(i_object) && i_object > 0, "i_object must be > 0");
  require(std::isfinite(i_reference) && i_reference > 0, "i_reference must be > 0");
  require(jitter_sigma >= 0, "jitter_sigma must be >= 0");
  require(noise_sigma >= 0, "noise_sigma must be >= 0");
  for (double s : shift_schedule) require(std::isfinite(s), "shift_schedule entries must be finite");
  require(std::isfinite(envelope_reference_opd), "envelope_reference_opd must be finite");
}

double ForwardModelSpec::fringe_amplitude() const { return 2.0 * std::sqrt(i_object * i_reference); }

void InterferogramStack::validate() const {
  if (frames[0].size() == 0) throw ShapeError("stack: empty frame");
  for (int k = 1; k < 5; ++k) {
    require_same_shape(frames[0], frames[k], "stack frames");
  }
}

Image height_profile(const PhaseObjectSpec& spec, int width, int height) {
  if (width < 8 || height < 8) {
    throw ShapeError("phase object needs at least 8x8 pixels");
  }
  spec.validate();
  Image h = Image::Zero(height, width);
  switch (spec.kind) {
    case ObjectKind::flat:
      break;
    case ObjectKind::waveguide_ridge: {
      const auto& r = spec.ridge;
      const double half = 0.5 * r.width;
      if (r.center - half - r.edge < 0 || r.center + half + r.edge > width - 1) {
        throw ConfigError("ridge extends outside the image (center " + std::to_string(r.center) +
                          ", width " + std::to_string(r.width) + ", edge " +
                          std::to_string(r.edge) + ", image width " + std::to_string(width) + ")");
      }
      for (int x = 0; x < width; ++x) {
        const double d = std::abs(x - r.center);
        double v = 0.0;
        if (d <= half) {
          v = r.height;
        } else if (r.edge > 0 && d < half + r.edge) {
          v = 0.5 * r.height * (1.0 + std::cos(kPi * (d - half) / r.edge));
        }
        h.col(x).setConstant(v);
      }
      break;
    }
    case ObjectKind::cell_blobs: {
      // Cells do not stack: overlapping blobs combine by maximum.
      for (const auto& b : spec.blobs) {
        if (b.center_x < 0 || b.center_x > width - 1 || b.center_y < 0 || b.center_y > height - 1) {
          throw ConfigError("blob center (" + std::to_string(b.center_x) + ", " +
                            std::to_string(b.center_y) + ") outside the image");
        }
        const double inv = 1.0 / (2.0 * b.radius * b.radius);
        for (int y = 0; y < height; ++y) {
          for (int x = 0; x < width; ++x) {
            const double dx = x - b.center_x, dy = y - b.center_y;
            h(y, x) = std::max(h(y, x), b.peak_height * std::exp(-(dx * dx + dy * dy) * inv));
          }
        }
      }
      break;
    }
  }
  return h;
}

PhaseMap make_phase_object(const PhaseObjectSpec& spec, int width, int height, double lambda0) {
  require(lambda0 > 0, "lambda0 must be > 0");
  Image h = height_profile(spec, width, height);
  return PhaseMap{(4.0 * kPi / lambda0) * h, false};
}

double coherence_envelope(double opd, const SourceSpec& source) {
  const double r = opd / source.coherence_length;
  return std::exp(-r * r);
}

Image envelope_map(const PhaseMap& phase, const ForwardModelSpec& model) {
  const double lambda0 = model.source.lambda0;
  const SourceSpec& src = model.source;
  const double ref = model.envelope_reference_opd;
  return phase.values.unaryExpr([&](double phi) {
    const double h = lambda0 * phi / (4.0 * kPi);
    return coherence_envelope(2.0 * h - ref, src);
  });
}

Image simulate_frame(const PhaseMap& phase, double shift, const ForwardModelSpec& model,
                     const Image& envelope, const std::optional<Image>& noise_field) {
  if (phase.wrapped) throw ShapeError("simulate_frame expects an unwrapped ground-truth phase");
  Image frame = interference(phase.values, shift, envelope, model.i_object, model.i_reference);
  if (noise_field) {
    require_same_shape(frame, *noise_field, "simulate_frame noise field");
    frame += *noise_field;
  }
  return frame;
}

Image simulate_frame(const PhaseMap& phase, double shift, const ForwardModelSpec& model,
                     const std::optional<Image>& noise_field) {
  return simulate_frame(phase, shift, model, envelope_map(phase, model), noise_field);
}

InterferogramStack simulate_stack(const PhaseMap& phase, const ForwardModelSpec& model,
                                  std::uint64_t seed) {
  model.validate();
  if (phase.values.size() == 0) throw ShapeError("simulate_stack: empty phase map");
  InterferogramStack stack;
  stack.model = model;
  stack.seed = seed;
  Rng rng(seed);
  for (int k = 0; k < 5; ++k) {
    const double eps = model.jitter_sigma > 0 ? model.jitter_sigma * rng.normal() : 0.0;
    stack.realized_shifts[k] = model.shift_schedule[k] + eps;
  }
  const Image envelope = envelope_map(phase, model);
  for (int k = 0; k < 5; ++k) {
    std::optional<Image> noise;
    if (model.noise_sigma > 0) {
      Image n(phase.values.rows(), phase.values.cols());
      for (Eigen::Index i = 0; i < n.size(); ++i) n(i) = model.noise_sigma * rng.normal();
      noise = std::move(n);
    }
    stack.frames[k] = simulate_frame(phase, stack.realized_shifts[k], model, envelope, noise);
  }
  return stack;
}

void ObjectFamily::validate() const {
  require(ridge_width_min > 0 && ridge_width_min <= ridge_width_max, "ridge width range invalid");
  require(ridge_edge >= 0, "ridge edge must be >= 0");
  require(ridge_height_min >= 0 && ridge_height_min <= ridge_height_max, "ridge height range invalid");
  require(blob_count_min >= 1 && blob_count_min <= blob_count_max, "blob count range invalid");
  require(blob_radius_min > 0 && blob_radius_min <= blob_radius_max, "blob radius range invalid");
  require(blob_peak_min >= 0 && blob_peak_min <= blob_peak_max, "blob peak range invalid");
}

PhaseObjectSpec sample_object(const ObjectFamily& family, int width, int height, Rng& rng) {
  family.validate();
  PhaseObjectSpec spec;
  spec.kind = family.kind;
  switch (family.kind) {
    case ObjectKind::flat:
      break;
    case ObjectKind::waveguide_ridge: {
      auto& r = spec.ridge;
      r.width = std::max(1.0, std::round(width * rng.uniform(family.ridge_width_min, family.ridge_width_max)));
      r.edge = family.ridge_edge;
      r.height = rng.uniform(family.ridge_height_min, family.ridge_height_max);
      const double margin = 0.5 * r.width + r.edge;
      const double lo = margin, hi = (width - 1) - margin;
      if (hi < lo) throw ConfigError("ridge family does not fit in an image of width " + std::to_string(width));
      r.center = rng.uniform(lo, hi);
      break;
    }
    case ObjectKind::cell_blobs: {
      const int span = family.blob_count_max - family.blob_count_min + 1;
      const int count = family.blob_count_min + static_cast<int>(rng.index(static_cast<std::size_t>(span)));
      const double side = std::min(width, height);
      for (int i = 0; i < count; ++i) {
        BlobGeometry b;
        b.radius = std::max(1.0, side * rng.uniform(family.blob_radius_min, family.blob_radius_max));
        b.peak_height = rng.uniform(family.blob_peak_min, family.blob_peak_max);
        const double m = std::min(b.radius, 0.5 * (side - 1));
        b.center_x = rng.uniform(m, (width - 1) - m);
        b.center_y = rng.uniform(m, (height - 1) - m);
        spec.blobs.push_back(b);
      }
      break;
    }
  }
  return spec;
}

SynthSample synth_sample(std::size_t index, int width, int height, const ObjectFamily& family,
                         const ForwardModelSpec& model, std::uint64_t seed) {
  const std::uint64_t sample_seed = derive_seed(seed, index);
  Rng object_rng(derive_seed(sample_seed, 0));
  SynthSample s;
  s.object = sample_object(family, width, height, object_rng);
  s.truth = make_phase_object(s.object, width, height, model.source.lambda0);
  s.stack = simulate_stack(s.truth, model, derive_seed(sample_seed, 1));
  return s;
}

std::vector<SynthSample> synth_dataset(std::size_t count, int width, int height,
                                       const ObjectFamily& family, const ForwardModelSpec& model,
                                       std::uint64_t seed) {
  if (count < 1) throw ConfigError("synth_dataset: count must be >= 1");
  model.validate();
  std::vector<SynthSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(synth_sample(i, width, height, family, model, seed));
  return out;
}

const char* to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::waveguide_ridge: return "waveguide_ridge";
    case ObjectKind::cell_blobs: return "cell_blobs";
    case ObjectKind::flat: return "flat";
  }
  return "flat";
}

ObjectKind object_kind_from_string(const std::string& s) {
  if (s == "waveguide_ridge") return ObjectKind::waveguide_ridge;
  if (s == "cell_blobs") return ObjectKind::cell_blobs;
  if (s == "flat") return ObjectKind::flat;
  throw ConfigError("unknown object kind '" + s + "'");
}

}  // namespace psim
