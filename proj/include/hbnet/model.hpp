#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hbnet/rcl.hpp"

namespace hbnet {

// Declarative description of one model-grid entry. Table-style naming:
// mode + ea/hb flags, e.g. {BL, ea=true, hb=true} is HB-BL-EA, and
// {B, width_factor=10} is BF.
struct ModelSpec {
    WiringMode mode = WiringMode::B;
    bool ea = false;
    bool hb = false;
    int n_classes = 10;
    i64 c1 = 32;
    i64 c2 = 64;
    i64 width_factor = 1;
    int time_steps = 1;  // 1 for B, 4 otherwise
    i64 kernel = 3;

    void validate() const;
    std::string name() const;

    /// Spec with grid defaults for a named row ("B", "BF", "HB-BL-EA", ...).
    static ModelSpec from_name(const std::string& name, int n_classes);

    bool operator==(const ModelSpec&) const = default;
};

/// First field name on which the two specs differ, if any.
std::optional<std::string> spec_mismatch(const ModelSpec& a, const ModelSpec& b);

// A built model: one layer stack per HB cluster (or a single stack), plus
// a registry of named parameter tensors in stable order.
class Model {
  public:
    static Model build(const ModelSpec& spec, u64 seed);

    const ModelSpec& spec() const { return spec_; }
    const std::vector<LayerStack>& clusters() const { return clusters_; }

    /// Named parameters, ordered cluster-major; names are stable across
    /// runs and releases (checkpoint compatibility).
    const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }
    Tensor param(const std::string& name) const;

    i64 count_params() const;

    /// Per-step label probabilities, each [B, n_classes] in (0,1).
    std::vector<Tensor> forward(Tape* tape, const Tensor& batch) const;
    /// Per-step logits, each [B, n_classes].
    std::vector<Tensor> forward_logits(Tape* tape, const Tensor& batch) const;

    void zero_grads() const;

    std::string save_bytes() const;
    void save(const std::string& path) const;
    static Model load_bytes(const std::string& bytes);
    static Model load(const std::string& path);

  private:
    Model() = default;

    ModelSpec spec_;
    std::vector<LayerStack> clusters_;
    std::vector<std::pair<std::string, Tensor>> params_;
};

/// All fifteen model-grid rows, in table order.
std::vector<std::string> model_grid_names();

}  // namespace hbnet
