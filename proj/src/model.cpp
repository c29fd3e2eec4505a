#include "hbnet/model.hpp"

#include <cmath>

#include "hbnet/io.hpp"

namespace hbnet {

void ModelSpec::validate() const {
    check(n_classes >= 1, "ModelSpec: n_classes must be >= 1");
    check(c1 >= 1 && c2 >= 1, "ModelSpec: channel widths must be >= 1");
    check(width_factor >= 1, "ModelSpec: width_factor must be >= 1");
    check(kernel >= 1 && kernel % 2 == 1, "ModelSpec: kernel size must be odd");
    check(time_steps >= 1, "ModelSpec: time_steps must be >= 1");
    if (mode == WiringMode::B)
        check(time_steps == 1, "ModelSpec: mode B runs a single time step");
    if (ea) check(mode != WiringMode::B, "ModelSpec: EA requires a recurrent mode (multiple steps)");
}

std::string ModelSpec::name() const {
    std::string n;
    if (hb) n += "HB-";
    n += to_string(mode);
    if (mode == WiringMode::B && width_factor > 1) n = (hb ? "HB-BF" : "BF");
    if (ea) n += "-EA";
    return n;
}

ModelSpec ModelSpec::from_name(const std::string& name, int n_classes) {
    ModelSpec spec;
    spec.n_classes = n_classes;
    std::string rest = name;
    if (rest.rfind("HB-", 0) == 0) {
        spec.hb = true;
        rest = rest.substr(3);
    }
    if (rest.size() > 3 && rest.substr(rest.size() - 3) == "-EA") {
        spec.ea = true;
        rest = rest.substr(0, rest.size() - 3);
    }
    if (rest == "BF") {
        spec.mode = WiringMode::B;
        spec.width_factor = n_classes;  // "increased by a factor of 10 or 26"
    } else {
        spec.mode = wiring_mode_from_string(rest);
    }
    spec.time_steps = spec.mode == WiringMode::B ? 1 : 4;
    spec.validate();
    return spec;
}

std::optional<std::string> spec_mismatch(const ModelSpec& a, const ModelSpec& b) {
    if (a.mode != b.mode) return "mode";
    if (a.ea != b.ea) return "ea";
    if (a.hb != b.hb) return "hb";
    if (a.n_classes != b.n_classes) return "n_classes";
    if (a.c1 != b.c1) return "c1";
    if (a.c2 != b.c2) return "c2";
    if (a.width_factor != b.width_factor) return "width_factor";
    if (a.time_steps != b.time_steps) return "time_steps";
    if (a.kernel != b.kernel) return "kernel";
    return std::nullopt;
}

std::vector<std::string> model_grid_names() {
    return {"B",     "BF",    "BT",    "BL",     "BLT",      "BT-EA",    "BL-EA",   "BLT-EA",
            "HB-B",  "HB-BL", "HB-BT", "HB-BLT", "HB-BL-EA", "HB-BT-EA", "HB-BLT-EA"};
}

namespace {

Tensor glorot_kernel(i64 cout, i64 cin, i64 k, u64 key) {
    const double fan = static_cast<double>((cin + cout) * k * k);
    const double bound = std::sqrt(6.0 / fan);
    return Tensor::uniform({cout, cin, k, k}, -bound, bound, key, true);
}

}  // namespace

Model Model::build(const ModelSpec& spec, u64 seed) {
    spec.validate();
    Model model;
    model.spec_ = spec;
    const int n_stacks = spec.hb ? spec.n_classes : 1;
    const i64 n_out = spec.hb ? 1 : spec.n_classes;
    const i64 k = spec.kernel;
    const i64 c1 = spec.c1;
    const i64 c2 = spec.c2 * spec.width_factor;  // BF widens conv2 and the readout input

    const u64 root = rng::key_from_seed(seed);
    u64 next_param = 0;
    auto reg = [&](const std::string& name, Tensor t) {
        model.params_.emplace_back(name, t);
        return t;
    };
    auto kernel_of = [&](const std::string& name, i64 cout, i64 cin) {
        return reg(name, glorot_kernel(cout, cin, k, rng::split(root, next_param++)));
    };
    auto bias_of = [&](const std::string& name, i64 len) {
        ++next_param;  // biases start at zero but keep their slot in the key schedule
        return reg(name, Tensor::zeros({len}, true));
    };

    for (int j = 0; j < n_stacks; ++j) {
        const std::string prefix = "cluster" + std::to_string(j) + ".";
        LayerStack stack;
        stack.mode = spec.mode;

        RclLayer layer1;
        layer1.index = 1;
        layer1.bottom_up.kernel = kernel_of(prefix + "conv1.kernel", c1, 1);
        layer1.bottom_up.bias = bias_of(prefix + "conv1.bias", c1);
        if (mode_has_lateral(spec.mode)) {
            ConvParams lat;
            lat.kernel = kernel_of(prefix + "lat1.kernel", c1, c1);
            layer1.lateral = lat;
        }
        if (mode_has_topdown(spec.mode)) {
            ConvParams td;
            td.kernel = kernel_of(prefix + "td1.kernel", c2, c1);
            layer1.top_down = td;
        }
        stack.layers.push_back(layer1);

        RclLayer layer2;
        layer2.index = 2;
        layer2.bottom_up.kernel = kernel_of(prefix + "conv2.kernel", c2, c1);
        layer2.bottom_up.bias = bias_of(prefix + "conv2.bias", c2);
        if (mode_has_lateral(spec.mode)) {
            ConvParams lat;
            lat.kernel = kernel_of(prefix + "lat2.kernel", c2, c2);
            layer2.lateral = lat;
        }
        stack.layers.push_back(layer2);

        stack.out_conv.kernel = kernel_of(prefix + "readout.kernel", n_out, c2);
        stack.out_conv.bias = bias_of(prefix + "readout.bias", n_out);
        model.clusters_.push_back(std::move(stack));
    }
    return model;
}

Tensor Model::param(const std::string& name) const {
    for (const auto& [n, t] : params_)
        if (n == name) return t;
    fail("no parameter named '" + name + "'");
}

i64 Model::count_params() const {
    i64 total = 0;
    for (const auto& [name, t] : params_) total += t.numel();
    return total;
}

std::vector<Tensor> Model::forward_logits(Tape* tape, const Tensor& batch) const {
    check(batch.defined() && batch.rank() == 4 && batch.dim(1) == 1,
          "forward: batch must be [B,1,H,W], got " +
              (batch.defined() ? shape_str(batch.shape()) : "undefined"));
    if (!spec_.hb) return unroll(tape, clusters_[0], batch, spec_.time_steps, spec_.ea);
    // Each cluster sees the same input; per-cluster scalar logits are
    // concatenated in label order.
    std::vector<std::vector<Tensor>> per_cluster;
    per_cluster.reserve(clusters_.size());
    for (const auto& stack : clusters_)
        per_cluster.push_back(unroll(tape, stack, batch, spec_.time_steps, spec_.ea));
    std::vector<Tensor> logits;
    for (int tau = 0; tau < spec_.time_steps; ++tau) {
        std::vector<Tensor> cols;
        cols.reserve(per_cluster.size());
        for (const auto& steps : per_cluster) cols.push_back(steps[static_cast<size_t>(tau)]);
        logits.push_back(concat_cols(tape, cols));
    }
    return logits;
}

std::vector<Tensor> Model::forward(Tape* tape, const Tensor& batch) const {
    std::vector<Tensor> probs;
    for (const Tensor& l : forward_logits(tape, batch)) probs.push_back(sigmoid(tape, l));
    return probs;
}

void Model::zero_grads() const {
    for (const auto& [name, t] : params_) const_cast<Tensor&>(t).zero_grad();
}

namespace {
constexpr char kMagic[4] = {'H', 'B', 'C', 'K'};
constexpr u16 kVersion = 1;
}  // namespace

std::string Model::save_bytes() const {
    std::string out;
    io::put_bytes(out, kMagic, 4);
    io::put_le<u16>(out, kVersion);
    io::put_le<u8>(out, static_cast<u8>(spec_.mode));
    io::put_le<u8>(out, spec_.ea ? 1 : 0);
    io::put_le<u8>(out, spec_.hb ? 1 : 0);
    io::put_le<u16>(out, static_cast<u16>(spec_.n_classes));
    io::put_le<u16>(out, static_cast<u16>(spec_.c1));
    io::put_le<u16>(out, static_cast<u16>(spec_.c2));
    io::put_le<u16>(out, static_cast<u16>(spec_.width_factor));
    io::put_le<u16>(out, static_cast<u16>(spec_.time_steps));
    io::put_le<u16>(out, static_cast<u16>(spec_.kernel));
    io::put_le<u32>(out, static_cast<u32>(params_.size()));
    for (const auto& [name, t] : params_) {
        io::put_le<u16>(out, static_cast<u16>(name.size()));
        io::put_bytes(out, name.data(), name.size());
        io::put_le<u8>(out, static_cast<u8>(t.rank()));
        for (i64 d : t.shape()) io::put_le<u32>(out, static_cast<u32>(d));
        for (double v : t.data()) io::put_f64(out, v);
    }
    return out;
}

void Model::save(const std::string& path) const { io::write_file(path, save_bytes()); }

Model Model::load_bytes(const std::string& bytes) {
    io::Reader r(bytes);
    if (r.get_string(4) != std::string(kMagic, 4)) fail("checkpoint: bad magic (not an HBCK file)");
    const u16 version = r.get_le<u16>();
    if (version != kVersion)
        fail("checkpoint: unsupported format version " + std::to_string(version));
    ModelSpec spec;
    const u8 mode = r.get_le<u8>();
    check(mode <= 3, "checkpoint: bad wiring mode byte");
    spec.mode = static_cast<WiringMode>(mode);
    spec.ea = r.get_le<u8>() != 0;
    spec.hb = r.get_le<u8>() != 0;
    spec.n_classes = r.get_le<u16>();
    spec.c1 = r.get_le<u16>();
    spec.c2 = r.get_le<u16>();
    spec.width_factor = r.get_le<u16>();
    spec.time_steps = r.get_le<u16>();
    spec.kernel = r.get_le<u16>();
    spec.validate();

    Model model = build(spec, 0);
    const u32 count = r.get_le<u32>();
    check(count == model.params_.size(),
          "checkpoint: parameter count " + std::to_string(count) + " does not match spec (" +
              std::to_string(model.params_.size()) + " expected)");
    for (auto& [name, t] : model.params_) {
        const u16 len = r.get_le<u16>();
        const std::string got = r.get_string(len);
        if (got != name) fail("checkpoint: parameter name mismatch: expected '" + name + "', found '" + got + "'");
        const u8 ndim = r.get_le<u8>();
        Shape shape(ndim);
        for (auto& d : shape) d = r.get_le<u32>();
        check(shape == t.shape(), "checkpoint: shape mismatch for '" + name + "': expected " +
                                      shape_str(t.shape()) + ", found " + shape_str(shape));
        auto dst = t.data();
        for (double& v : dst) v = r.get_f64();
    }
    check(r.at_end(), "checkpoint: trailing bytes after last parameter");
    return model;
}

Model Model::load(const std::string& path) { return load_bytes(io::read_file(path)); }

}  // namespace hbnet
