#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rvm/core/rng.hpp"
#include "rvm/geom/warp.hpp"
#include "rvm/model/config.hpp"
#include "rvm/net/ops.hpp"
#include "rvm/net/tensor.hpp"

namespace rvm::model {

template <typename Scalar>
struct NamedConv {
  std::string name;
  int stride = 1;
  net::ConvParams<Scalar> params;
};

// Multi-sweep fusion network. A shared per-sweep encoder feeds a shared
// feature transformer (fed the per-column ego-motion features); previous
// sweeps are warped into the current raster and the stack drives a
// three-scale column-only U-Net backbone with residual blocks.
template <typename Scalar>
class Network {
 public:
  using Tensor = net::Tensor<Scalar>;
  using Params = net::ConvParams<Scalar>;

  struct Inputs {
    // Oldest sweep first, current sweep last. The early-fusion variant
    // instead takes a single tensor with all sweeps re-rendered into the
    // current frame and stacked along channels.
    std::vector<Tensor> sweeps;
    std::vector<Tensor> ego;           // per sweep, (dx, dy, Dz) per column
    std::vector<geom::WarpMap> warps;  // per previous sweep
  };

  struct Block {
    Tensor h1, r1, sum, out;
  };

  struct Cache {
    std::vector<Tensor> enc_h1, enc_r1, enc_h2, enc_r2;
    std::vector<Tensor> fused_in, tr_h1, tr_r1, tr_h2, tr_r2;
    std::vector<Tensor> warped, warp_mask;
    Tensor backbone_in;
    Tensor b_in_h, b_in_r;
    Block blk1, blk2, blk3, blk4, blk5;
    Tensor down1_h, down1_r, down2_h, down2_r;
    Tensor up2, cat2, fuse2_h, fuse2_r;
    Tensor up1, cat1, fuse1_h, fuse1_r;
  };

  explicit Network(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    build();
  }

  const ModelConfig& config() const { return cfg_; }
  std::vector<NamedConv<Scalar>>& layers() { return layers_; }
  const std::vector<NamedConv<Scalar>>& layers() const { return layers_; }

  bool has_transformer() const {
    return cfg_.variant == Variant::kProposed || cfg_.variant == Variant::kGlobalEgo;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.params.parameter_count();
    return n;
  }

  // Fan-in-scaled uniform init (variance 2/fan_in, which preserves activation
  // scale through the ReLU stack). The head kernel starts at zero so the raw
  // outputs begin exactly at the bias operating point: background slightly
  // favoured, zero displacements, the double-angle encoding at (1, 0) and
  // unit Laplace scales.
  void init_params(Rng rng) {
    for (auto& layer : layers_) {
      const double bound = std::sqrt(6.0 / (double(layer.params.kh) * layer.params.kw * layer.params.cin));
      for (auto& v : layer.params.kernel) v = Scalar(rng.uniform(-bound, bound));
      for (auto& v : layer.params.bias) v = Scalar(0);
    }
    auto& head = layers_[ids_.head].params;
    for (auto& v : head.kernel) v = Scalar(0);
    head.bias[0] = Scalar(2);  // background logit
    const int reg0 = cfg_.regression_offset();
    for (int t = 0; t <= cfg_.horizon; ++t) {
      head.bias[reg0 + 2 + 6 * t + 2] = Scalar(1);
      // log-scales start near the box-scale regime instead of 1 m
      head.bias[reg0 + 2 + 6 * t + 4] = Scalar(-1.2);
      head.bias[reg0 + 2 + 6 * t + 5] = Scalar(-1.2);
    }
  }

  std::vector<Params> make_gradient_store() const {
    std::vector<Params> grads;
    grads.reserve(layers_.size());
    for (const auto& l : layers_)
      grads.emplace_back(l.params.kh, l.params.kw, l.params.cin, l.params.cout);
    return grads;
  }

  Tensor forward(const Inputs& in, Cache* cache_ptr = nullptr) const {
    Cache local;
    Cache& c = cache_ptr ? *cache_ptr : local;
    assemble_backbone_input(in, c);
    return backbone_forward(c);
  }

  void backward(const Inputs& in, const Cache& c, const Tensor& grad_out,
                std::vector<Params>& grads) const {
    if (grads.size() != layers_.size())
      throw std::invalid_argument("Network::backward: gradient store mismatch");
    Tensor g_backbone_in = backbone_backward(c, grad_out, grads);
    fusion_backward(in, c, g_backbone_in, grads);
  }

 private:
  ModelConfig cfg_;
  std::vector<NamedConv<Scalar>> layers_;

  struct LayerIds {
    int enc1 = -1, enc2 = -1, tr1 = -1, tr2 = -1;
    int bb_in = -1;
    int res1a = -1, res1b = -1, down1 = -1;
    int res2a = -1, res2b = -1, down2 = -1;
    int res3a = -1, res3b = -1;
    int fuse2 = -1, res4a = -1, res4b = -1;
    int fuse1 = -1, res5a = -1, res5b = -1;
    int head = -1;
  } ids_;

  int add_layer(const std::string& name, int kh, int kw, int cin, int cout, int stride = 1) {
    layers_.push_back({name, stride, Params(kh, kw, cin, cout)});
    return static_cast<int>(layers_.size()) - 1;
  }

  int backbone_input_channels() const {
    const int e = cfg_.encoder_channels;
    const int prev = cfg_.sweep_count - 1;
    if (cfg_.variant == Variant::kEarlyFusion) return e;
    return e + prev * (e + 1);
  }

  void build() {
    const int e = cfg_.encoder_channels;
    const int b = cfg_.backbone_channels;
    const int enc_in = cfg_.variant == Variant::kEarlyFusion
                           ? cfg_.input_channels * cfg_.sweep_count
                           : cfg_.input_channels;
    ids_.enc1 = add_layer("encoder.conv1", 3, 3, enc_in, e);
    ids_.enc2 = add_layer("encoder.conv2", 3, 3, e, e);
    if (has_transformer()) {
      ids_.tr1 = add_layer("transformer.conv1", 3, 3, e + 3, e);
      ids_.tr2 = add_layer("transformer.conv2", 3, 3, e, e);
    }
    ids_.bb_in = add_layer("backbone.in", 3, 3, backbone_input_channels(), b);
    ids_.res1a = add_layer("backbone.block1.a", 3, 3, b, b);
    ids_.res1b = add_layer("backbone.block1.b", 3, 3, b, b);
    ids_.down1 = add_layer("backbone.down1", 3, 3, b, b, 2);
    ids_.res2a = add_layer("backbone.block2.a", 3, 3, b, b);
    ids_.res2b = add_layer("backbone.block2.b", 3, 3, b, b);
    ids_.down2 = add_layer("backbone.down2", 3, 3, b, b, 2);
    ids_.res3a = add_layer("backbone.block3.a", 3, 3, b, b);
    ids_.res3b = add_layer("backbone.block3.b", 3, 3, b, b);
    ids_.fuse2 = add_layer("backbone.fuse2", 3, 3, 2 * b, b);
    ids_.res4a = add_layer("backbone.block4.a", 3, 3, b, b);
    ids_.res4b = add_layer("backbone.block4.b", 3, 3, b, b);
    ids_.fuse1 = add_layer("backbone.fuse1", 3, 3, 2 * b, b);
    ids_.res5a = add_layer("backbone.block5.a", 3, 3, b, b);
    ids_.res5b = add_layer("backbone.block5.b", 3, 3, b, b);
    ids_.head = add_layer("backbone.head", 1, 1, b, cfg_.output_channels());
  }

  const Params& params(int id) const { return layers_[id].params; }

  void encode_sweep(const Tensor& sweep, int s, Cache& c) const {
    c.enc_h1[s] = net::conv2d_forward(sweep, params(ids_.enc1), 1);
    c.enc_r1[s] = net::relu_forward(c.enc_h1[s]);
    c.enc_h2[s] = net::conv2d_forward(c.enc_r1[s], params(ids_.enc2), 1);
    c.enc_r2[s] = net::relu_forward(c.enc_h2[s]);
  }

  void transform_sweep(const Tensor& ego, int s, Cache& c) const {
    c.fused_in[s] = net::concat_channels<Scalar>({&c.enc_r2[s], &ego});
    c.tr_h1[s] = net::conv2d_forward(c.fused_in[s], params(ids_.tr1), 1);
    c.tr_r1[s] = net::relu_forward(c.tr_h1[s]);
    c.tr_h2[s] = net::conv2d_forward(c.tr_r1[s], params(ids_.tr2), 1);
    c.tr_r2[s] = net::relu_forward(c.tr_h2[s]);
  }

  void assemble_backbone_input(const Inputs& in, Cache& c) const {
    const int count = cfg_.variant == Variant::kEarlyFusion ? 1 : cfg_.sweep_count;
    if (static_cast<int>(in.sweeps.size()) != count)
      throw std::invalid_argument("Network: sweep count does not match configuration");
    const int h = in.sweeps[0].h, w = in.sweeps[0].w;
    if (w % 4 != 0) throw std::invalid_argument("Network: raster width must be divisible by 4");

    c.enc_h1.resize(count);
    c.enc_r1.resize(count);
    c.enc_h2.resize(count);
    c.enc_r2.resize(count);
    for (int s = 0; s < count; ++s) {
      if (in.sweeps[s].h != h || in.sweeps[s].w != w)
        throw std::invalid_argument("Network: sweep raster size mismatch");
      encode_sweep(in.sweeps[s], s, c);
    }

    if (cfg_.variant == Variant::kEarlyFusion) {
      c.backbone_in = c.enc_r2[0];
      return;
    }

    const int prev = cfg_.sweep_count - 1;
    if (static_cast<int>(in.warps.size()) != prev)
      throw std::invalid_argument("Network: need a warp map per previous sweep");

    const std::vector<Tensor>* features = &c.enc_r2;
    if (has_transformer()) {
      if (static_cast<int>(in.ego.size()) != count)
        throw std::invalid_argument("Network: need ego features per sweep");
      c.fused_in.resize(count);
      c.tr_h1.resize(count);
      c.tr_r1.resize(count);
      c.tr_h2.resize(count);
      c.tr_r2.resize(count);
      for (int s = 0; s < count; ++s) transform_sweep(in.ego[s], s, c);
      features = &c.tr_r2;
    }

    c.warped.assign(prev, Tensor(h, w, cfg_.encoder_channels));
    c.warp_mask.assign(prev, Tensor(h, w, 1));
    std::vector<const Tensor*> parts;
    parts.push_back(&(*features)[count - 1]);  // current sweep
    for (int s = 0; s < prev; ++s) {
      geom::apply_warp((*features)[s].data.data(), h, w, cfg_.encoder_channels, in.warps[s],
                       Scalar(0), c.warped[s].data.data(), c.warp_mask[s].data.data());
      parts.push_back(&c.warped[s]);
      parts.push_back(&c.warp_mask[s]);
    }
    c.backbone_in = net::concat_channels(parts);
  }

  void res_forward(int id_a, int id_b, const Tensor& x, Block& blk) const {
    blk.h1 = net::conv2d_forward(x, params(id_a), 1);
    blk.r1 = net::relu_forward(blk.h1);
    Tensor h2 = net::conv2d_forward(blk.r1, params(id_b), 1);
    blk.sum = net::residual_add(x, h2);
    blk.out = net::relu_forward(blk.sum);
  }

  Tensor backbone_forward(Cache& c) const {
    c.b_in_h = net::conv2d_forward(c.backbone_in, params(ids_.bb_in), 1);
    c.b_in_r = net::relu_forward(c.b_in_h);
    res_forward(ids_.res1a, ids_.res1b, c.b_in_r, c.blk1);
    c.down1_h = net::conv2d_forward(c.blk1.out, params(ids_.down1), 2);
    c.down1_r = net::relu_forward(c.down1_h);
    res_forward(ids_.res2a, ids_.res2b, c.down1_r, c.blk2);
    c.down2_h = net::conv2d_forward(c.blk2.out, params(ids_.down2), 2);
    c.down2_r = net::relu_forward(c.down2_h);
    res_forward(ids_.res3a, ids_.res3b, c.down2_r, c.blk3);
    c.up2 = net::column_upsample_forward(c.blk3.out);
    c.cat2 = net::concat_channels<Scalar>({&c.up2, &c.blk2.out});
    c.fuse2_h = net::conv2d_forward(c.cat2, params(ids_.fuse2), 1);
    c.fuse2_r = net::relu_forward(c.fuse2_h);
    res_forward(ids_.res4a, ids_.res4b, c.fuse2_r, c.blk4);
    c.up1 = net::column_upsample_forward(c.blk4.out);
    c.cat1 = net::concat_channels<Scalar>({&c.up1, &c.blk1.out});
    c.fuse1_h = net::conv2d_forward(c.cat1, params(ids_.fuse1), 1);
    c.fuse1_r = net::relu_forward(c.fuse1_h);
    res_forward(ids_.res5a, ids_.res5b, c.fuse1_r, c.blk5);
    return net::conv2d_forward(c.blk5.out, params(ids_.head), 1);
  }

  // Gradient of a residual block; adds into g_x (gradient of the block input).
  void res_backward(int id_a, int id_b, const Tensor& x, const Block& blk, const Tensor& g_out,
                    Tensor& g_x, std::vector<Params>& grads) const {
    Tensor g_sum(blk.sum.h, blk.sum.w, blk.sum.c);
    net::relu_backward(blk.sum, g_out, g_sum);
    for (std::size_t i = 0; i < g_x.size(); ++i) g_x.data[i] += g_sum.data[i];
    Tensor g_r1(blk.r1.h, blk.r1.w, blk.r1.c);
    net::conv2d_backward(blk.r1, params(id_b), 1, g_sum, &g_r1, &grads[id_b]);
    Tensor g_h1(blk.h1.h, blk.h1.w, blk.h1.c);
    net::relu_backward(blk.h1, g_r1, g_h1);
    net::conv2d_backward(x, params(id_a), 1, g_h1, &g_x, &grads[id_a]);
  }

  Tensor backbone_backward(const Cache& c, const Tensor& grad_out,
                           std::vector<Params>& grads) const {
    Tensor g_blk5(c.blk5.out.h, c.blk5.out.w, c.blk5.out.c);
    net::conv2d_backward(c.blk5.out, params(ids_.head), 1, grad_out, &g_blk5, &grads[ids_.head]);

    Tensor g_fuse1_r(c.fuse1_r.h, c.fuse1_r.w, c.fuse1_r.c);
    res_backward(ids_.res5a, ids_.res5b, c.fuse1_r, c.blk5, g_blk5, g_fuse1_r, grads);
    Tensor g_fuse1_h(c.fuse1_h.h, c.fuse1_h.w, c.fuse1_h.c);
    net::relu_backward(c.fuse1_h, g_fuse1_r, g_fuse1_h);
    Tensor g_cat1(c.cat1.h, c.cat1.w, c.cat1.c);
    net::conv2d_backward(c.cat1, params(ids_.fuse1), 1, g_fuse1_h, &g_cat1, &grads[ids_.fuse1]);

    Tensor g_up1(c.up1.h, c.up1.w, c.up1.c);
    Tensor g_blk1_out(c.blk1.out.h, c.blk1.out.w, c.blk1.out.c);
    net::concat_channels_backward<Scalar>(g_cat1, {&g_up1, &g_blk1_out});
    Tensor g_blk4_out(c.blk4.out.h, c.blk4.out.w, c.blk4.out.c);
    net::column_upsample_backward(g_up1, g_blk4_out);

    Tensor g_fuse2_r(c.fuse2_r.h, c.fuse2_r.w, c.fuse2_r.c);
    res_backward(ids_.res4a, ids_.res4b, c.fuse2_r, c.blk4, g_blk4_out, g_fuse2_r, grads);
    Tensor g_fuse2_h(c.fuse2_h.h, c.fuse2_h.w, c.fuse2_h.c);
    net::relu_backward(c.fuse2_h, g_fuse2_r, g_fuse2_h);
    Tensor g_cat2(c.cat2.h, c.cat2.w, c.cat2.c);
    net::conv2d_backward(c.cat2, params(ids_.fuse2), 1, g_fuse2_h, &g_cat2, &grads[ids_.fuse2]);

    Tensor g_up2(c.up2.h, c.up2.w, c.up2.c);
    Tensor g_blk2_out(c.blk2.out.h, c.blk2.out.w, c.blk2.out.c);
    net::concat_channels_backward<Scalar>(g_cat2, {&g_up2, &g_blk2_out});
    Tensor g_blk3_out(c.blk3.out.h, c.blk3.out.w, c.blk3.out.c);
    net::column_upsample_backward(g_up2, g_blk3_out);

    Tensor g_down2_r(c.down2_r.h, c.down2_r.w, c.down2_r.c);
    res_backward(ids_.res3a, ids_.res3b, c.down2_r, c.blk3, g_blk3_out, g_down2_r, grads);
    Tensor g_down2_h(c.down2_h.h, c.down2_h.w, c.down2_h.c);
    net::relu_backward(c.down2_h, g_down2_r, g_down2_h);
    net::conv2d_backward(c.blk2.out, params(ids_.down2), 2, g_down2_h, &g_blk2_out,
                         &grads[ids_.down2]);

    Tensor g_down1_r(c.down1_r.h, c.down1_r.w, c.down1_r.c);
    res_backward(ids_.res2a, ids_.res2b, c.down1_r, c.blk2, g_blk2_out, g_down1_r, grads);
    Tensor g_down1_h(c.down1_h.h, c.down1_h.w, c.down1_h.c);
    net::relu_backward(c.down1_h, g_down1_r, g_down1_h);
    net::conv2d_backward(c.blk1.out, params(ids_.down1), 2, g_down1_h, &g_blk1_out,
                         &grads[ids_.down1]);

    Tensor g_b_in_r(c.b_in_r.h, c.b_in_r.w, c.b_in_r.c);
    res_backward(ids_.res1a, ids_.res1b, c.b_in_r, c.blk1, g_blk1_out, g_b_in_r, grads);
    Tensor g_b_in_h(c.b_in_h.h, c.b_in_h.w, c.b_in_h.c);
    net::relu_backward(c.b_in_h, g_b_in_r, g_b_in_h);
    Tensor g_backbone_in(c.backbone_in.h, c.backbone_in.w, c.backbone_in.c);
    net::conv2d_backward(c.backbone_in, params(ids_.bb_in), 1, g_b_in_h, &g_backbone_in,
                         &grads[ids_.bb_in]);
    return g_backbone_in;
  }

  void encoder_backward(const Tensor& sweep, int s, const Cache& c, const Tensor& g_enc_out,
                        std::vector<Params>& grads) const {
    Tensor g_h2(c.enc_h2[s].h, c.enc_h2[s].w, c.enc_h2[s].c);
    net::relu_backward(c.enc_h2[s], g_enc_out, g_h2);
    Tensor g_r1(c.enc_r1[s].h, c.enc_r1[s].w, c.enc_r1[s].c);
    net::conv2d_backward(c.enc_r1[s], params(ids_.enc2), 1, g_h2, &g_r1, &grads[ids_.enc2]);
    Tensor g_h1(c.enc_h1[s].h, c.enc_h1[s].w, c.enc_h1[s].c);
    net::relu_backward(c.enc_h1[s], g_r1, g_h1);
    net::conv2d_backward(sweep, params(ids_.enc1), 1, g_h1, static_cast<Tensor*>(nullptr),
                         &grads[ids_.enc1]);
  }

  void fusion_backward(const Inputs& in, const Cache& c, const Tensor& g_backbone_in,
                       std::vector<Params>& grads) const {
    const int h = g_backbone_in.h, w = g_backbone_in.w;
    const int e = cfg_.encoder_channels;

    if (cfg_.variant == Variant::kEarlyFusion) {
      encoder_backward(in.sweeps[0], 0, c, g_backbone_in, grads);
      return;
    }

    const int count = cfg_.sweep_count;
    const int prev = count - 1;
    std::vector<Tensor> g_feat(count);
    for (int s = 0; s < count; ++s) g_feat[s] = Tensor(h, w, e);

    // Split off the current sweep's slice then per-sweep (features, mask).
    std::vector<Tensor> g_warped(prev);
    std::vector<Tensor> g_mask(prev);
    std::vector<Tensor*> split_parts;
    split_parts.push_back(&g_feat[count - 1]);
    for (int s = 0; s < prev; ++s) {
      g_warped[s] = Tensor(h, w, e);
      g_mask[s] = Tensor(h, w, 1);
      split_parts.push_back(&g_warped[s]);
      split_parts.push_back(&g_mask[s]);  // masks are data, gradient discarded
    }
    net::concat_channels_backward(g_backbone_in, split_parts);
    for (int s = 0; s < prev; ++s)
      geom::apply_warp_backward(g_warped[s].data.data(), h, w, e, in.warps[s],
                                g_feat[s].data.data());

    for (int s = 0; s < count; ++s) {
      if (has_transformer()) {
        Tensor g_th2(h, w, e);
        net::relu_backward(c.tr_h2[s], g_feat[s], g_th2);
        Tensor g_tr1(h, w, e);
        net::conv2d_backward(c.tr_r1[s], params(ids_.tr2), 1, g_th2, &g_tr1, &grads[ids_.tr2]);
        Tensor g_th1(h, w, e);
        net::relu_backward(c.tr_h1[s], g_tr1, g_th1);
        Tensor g_fused(h, w, e + 3);
        net::conv2d_backward(c.fused_in[s], params(ids_.tr1), 1, g_th1, &g_fused, &grads[ids_.tr1]);
        Tensor g_enc_out(h, w, e);
        Tensor g_ego(h, w, 3);  // ego features are inputs; gradient unused
        net::concat_channels_backward<Scalar>(g_fused, {&g_enc_out, &g_ego});
        encoder_backward(in.sweeps[s], s, c, g_enc_out, grads);
      } else {
        encoder_backward(in.sweeps[s], s, c, g_feat[s], grads);
      }
    }
  }
};

}  // namespace rvm::model
