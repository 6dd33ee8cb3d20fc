#include "sscil/model/model_state.hpp"

#include <torch/torch.h>

#include <ATen/CPUGeneratorImpl.h>
#include <cmath>
#include <cstring>

#include "sscil/common/error.hpp"
#include "sscil/common/rng.hpp"

namespace sscil {

namespace {

namespace nn = torch::nn;

// ---- encoder building blocks -------------------------------------------------

struct BasicBlockImpl : nn::Module {
  BasicBlockImpl(int64_t in, int64_t out, int64_t stride)
      : conv1(register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(false)))),
        bn1(register_module("bn1", nn::BatchNorm2d(out))),
        conv2(register_module("conv2", nn::Conv2d(nn::Conv2dOptions(out, out, 3).padding(1).bias(false)))),
        bn2(register_module("bn2", nn::BatchNorm2d(out))) {
    if (stride != 1 || in != out) {
      shortcut = register_module("shortcut", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, out, 1).stride(stride).bias(false)),
                                                            nn::BatchNorm2d(out)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1(conv1(x)));
    y = bn2(conv2(y));
    return torch::relu(y + (shortcut ? shortcut->forward(x) : x));
  }

  nn::Conv2d conv1;
  nn::BatchNorm2d bn1;
  nn::Conv2d conv2;
  nn::BatchNorm2d bn2;
  nn::Sequential shortcut{nullptr};
};
TORCH_MODULE(BasicBlock);

struct BottleneckImpl : nn::Module {
  BottleneckImpl(int64_t in, int64_t width, int64_t stride)
      : conv1(register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in, width, 1).bias(false)))),
        bn1(register_module("bn1", nn::BatchNorm2d(width))),
        conv2(register_module("conv2", nn::Conv2d(nn::Conv2dOptions(width, width, 3).stride(stride).padding(1).bias(false)))),
        bn2(register_module("bn2", nn::BatchNorm2d(width))),
        conv3(register_module("conv3", nn::Conv2d(nn::Conv2dOptions(width, width * 4, 1).bias(false)))),
        bn3(register_module("bn3", nn::BatchNorm2d(width * 4))) {
    if (stride != 1 || in != width * 4) {
      shortcut = register_module(
          "shortcut", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, width * 4, 1).stride(stride).bias(false)),
                                     nn::BatchNorm2d(width * 4)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1(conv1(x)));
    y = torch::relu(bn2(conv2(y)));
    y = bn3(conv3(y));
    return torch::relu(y + (shortcut ? shortcut->forward(x) : x));
  }

  nn::Conv2d conv1;
  nn::BatchNorm2d bn1;
  nn::Conv2d conv2;
  nn::BatchNorm2d bn2;
  nn::Conv2d conv3;
  nn::BatchNorm2d bn3;
  nn::Sequential shortcut{nullptr};
};
TORCH_MODULE(Bottleneck);

nn::Sequential make_encoder(const EncoderSpec& spec) {
  nn::Sequential seq;
  if (spec.architecture == "resnet50") {
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(3, 64, 7).stride(2).padding(3).bias(false)));
    seq->push_back(nn::BatchNorm2d(64));
    seq->push_back(nn::ReLU());
    seq->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).padding(1)));
    int64_t in = 64;
    const int64_t widths[] = {64, 128, 256, 512};
    const int blocks[] = {3, 4, 6, 3};
    for (int stage = 0; stage < 4; ++stage) {
      for (int b = 0; b < blocks[stage]; ++b) {
        seq->push_back(Bottleneck(in, widths[stage], (b == 0 && stage > 0) ? 2 : 1));
        in = widths[stage] * 4;
      }
    }
  } else {
    std::vector<int64_t> widths{64, 128, 256, 512};
    int blocks = 2;
    if (spec.architecture == "resnet-mini") widths = {32, 64, 128};
    if (spec.architecture == "resnet-micro") widths = {16, 32, 64};
    if (widths.size() == 3) blocks = 1;
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(3, widths[0], 3).padding(1).bias(false)));
    seq->push_back(nn::BatchNorm2d(widths[0]));
    seq->push_back(nn::ReLU());
    int64_t in = widths[0];
    for (std::size_t stage = 0; stage < widths.size(); ++stage) {
      for (int b = 0; b < blocks; ++b) {
        seq->push_back(BasicBlock(in, widths[stage], (b == 0 && stage > 0) ? 2 : 1));
        in = widths[stage];
      }
    }
  }
  seq->push_back(nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions(1)));
  seq->push_back(nn::Flatten());
  return seq;
}

nn::Sequential make_projector(const ProjectorSpec& spec, int feature_dim) {
  nn::Sequential seq;
  int64_t in = feature_dim;
  for (int layer = 0; layer < spec.depth; ++layer) {
    seq->push_back(nn::Linear(in, spec.width));
    if (layer + 1 < spec.depth) {
      seq->push_back(nn::BatchNorm1d(spec.width));
      seq->push_back(nn::ReLU());
    }
    in = spec.width;
  }
  return seq;
}

// Seeded, platform-independent initialisation: He-normal convolutions,
// unit/zero batch norm, uniform(+-1/sqrt(fan_in)) linear layers.
void initialise(nn::Module& module, std::uint64_t seed) {
  torch::NoGradGuard guard;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  for (auto& child : module.modules(/*include_self=*/true)) {
    if (auto* conv = child->as<nn::Conv2d>()) {
      const auto& w = conv->weight;
      const double fan_out = static_cast<double>(w.size(0) * w.size(2) * w.size(3));
      w.normal_(0.0, std::sqrt(2.0 / fan_out), gen);
      if (conv->bias.defined()) conv->bias.zero_();
    } else if (auto* bn2 = child->as<nn::BatchNorm2d>()) {
      bn2->weight.fill_(1.0);
      bn2->bias.zero_();
      bn2->running_mean.zero_();
      bn2->running_var.fill_(1.0);
    } else if (auto* bn1 = child->as<nn::BatchNorm1d>()) {
      bn1->weight.fill_(1.0);
      bn1->bias.zero_();
      bn1->running_mean.zero_();
      bn1->running_var.fill_(1.0);
    } else if (auto* lin = child->as<nn::Linear>()) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(lin->weight.size(1)));
      lin->weight.uniform_(-bound, bound, gen);
      lin->bias.uniform_(-bound, bound, gen);
    }
  }
}

TensorMap export_tensors(const nn::Module& module) {
  TensorMap out;
  for (const auto& item : module.named_parameters(true)) out.emplace_back(item.key(), item.value().detach().clone());
  for (const auto& item : module.named_buffers(true)) out.emplace_back(item.key(), item.value().detach().clone());
  return out;
}

void import_tensors(nn::Module& module, const TensorMap& tensors, const char* what) {
  torch::NoGradGuard guard;
  std::size_t used = 0;
  const auto copy = [&](const std::string& name, torch::Tensor& dst) {
    const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& kv) { return kv.first == name; });
    if (it == tensors.end()) throw Error(Errc::integrity, std::string(what) + " tensor '" + name + "' missing");
    if (!it->second.sizes().equals(dst.sizes()) || it->second.scalar_type() != dst.scalar_type()) {
      throw Error(Errc::integrity, std::string(what) + " tensor '" + name + "' has the wrong shape or dtype");
    }
    dst.copy_(it->second);
    ++used;
  };
  for (auto& item : module.named_parameters(true)) copy(item.key(), item.value());
  for (auto& item : module.named_buffers(true)) copy(item.key(), item.value());
  if (used != tensors.size()) throw Error(Errc::integrity, std::string(what) + " state has unexpected tensors");
}

constexpr std::uint64_t kEncoderStream = 0x656e63;
constexpr std::uint64_t kProjectorStream = 0x70726f6a;

}  // namespace

class NetworkImpl {
 public:
  NetworkImpl(const EncoderSpec& enc, const ProjectorSpec& proj)
      : encoder(make_encoder(enc)), projector(make_projector(proj, enc.feature_dim)) {}

  nn::Sequential encoder;
  nn::Sequential projector;
};

TensorMap clone_tensors(const TensorMap& tensors) {
  TensorMap out;
  out.reserve(tensors.size());
  for (const auto& [name, t] : tensors) out.emplace_back(name, t.clone());
  return out;
}

bool bitwise_equal(const TensorMap& a, const TensorMap& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& [na, ta] = a[i];
    const auto& [nb, tb] = b[i];
    if (na != nb || ta.scalar_type() != tb.scalar_type() || !ta.sizes().equals(tb.sizes())) return false;
    const auto ca = ta.contiguous();
    const auto cb = tb.contiguous();
    if (std::memcmp(ca.data_ptr(), cb.data_ptr(), ca.nbytes()) != 0) return false;
  }
  return true;
}

ModelState ModelState::clone() const {
  ModelState out = *this;
  out.encoder = clone_tensors(encoder);
  out.projector = clone_tensors(projector);
  return out;
}

bool bitwise_equal(const ModelState& a, const ModelState& b) {
  return a.phase_index == b.phase_index && a.encoder_spec == b.encoder_spec && a.projector_spec == b.projector_spec &&
         bitwise_equal(a.encoder, b.encoder) && bitwise_equal(a.projector, b.projector);
}

ModelState init_model(const EncoderSpec& encoder, const ProjectorSpec& projector, std::uint64_t seed) {
  validate_specs(encoder, projector);
  auto enc = make_encoder(encoder);
  initialise(*enc, mix(seed, kEncoderStream));
  ModelState state;
  state.phase_index = 0;
  state.encoder_spec = encoder;
  state.projector_spec = projector;
  state.encoder = export_tensors(*enc);
  state.projector = init_projector(projector, encoder.feature_dim, seed);
  return state;
}

TensorMap init_projector(const ProjectorSpec& projector, int feature_dim, std::uint64_t seed) {
  auto proj = make_projector(projector, feature_dim);
  initialise(*proj, mix(seed, kProjectorStream));
  return export_tensors(*proj);
}

ModelState inherit_state(const ModelState& prev, bool inherit_projector, std::uint64_t seed) {
  ModelState next;
  next.phase_index = prev.phase_index + 1;
  next.encoder_spec = prev.encoder_spec;
  next.projector_spec = prev.projector_spec;
  next.encoder = clone_tensors(prev.encoder);
  next.projector = inherit_projector ? clone_tensors(prev.projector)
                                     : init_projector(prev.projector_spec, prev.encoder_spec.feature_dim, seed);
  return next;
}

torch::Tensor images_to_tensor(std::span<const Image> images) {
  if (images.empty()) return torch::empty({0, 3, 0, 0});
  const int h = images.front().height();
  const int w = images.front().width();
  auto out = torch::empty({static_cast<int64_t>(images.size()), 3, h, w});
  float* dst = out.data_ptr<float>();
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t n = 0; n < images.size(); ++n) {
    const auto& img = images[n];
    if (img.height() != h || img.width() != w) throw Error(Errc::input_shape, "images in a batch differ in size");
    const auto& px = img.data();
    float* base = dst + n * 3 * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      base[i] = px[3 * i];
      base[plane + i] = px[3 * i + 1];
      base[2 * plane + i] = px[3 * i + 2];
    }
  }
  return out;
}

Network::Network(const EncoderSpec& encoder, const ProjectorSpec& projector)
    : encoder_spec_(encoder), projector_spec_(projector) {
  validate_specs(encoder, projector);
  impl_ = std::make_unique<NetworkImpl>(encoder, projector);
}

Network::Network(const ModelState& state) : Network(state.encoder_spec, state.projector_spec) { load(state); }

Network::~Network() = default;
Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;

void Network::load(const ModelState& state) {
  if (!(state.encoder_spec == encoder_spec_) || !(state.projector_spec == projector_spec_)) {
    throw Error(Errc::integrity, "state specs differ from the network's");
  }
  import_tensors(*impl_->encoder, state.encoder, "encoder");
  import_tensors(*impl_->projector, state.projector, "projector");
}

ModelState Network::export_state(int phase_index) const {
  ModelState state;
  state.phase_index = phase_index;
  state.encoder_spec = encoder_spec_;
  state.projector_spec = projector_spec_;
  state.encoder = export_tensors(*impl_->encoder);
  state.projector = export_tensors(*impl_->projector);
  return state;
}

torch::Tensor Network::encode(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != 3 || images.size(2) != encoder_spec_.input_size ||
      images.size(3) != encoder_spec_.input_size) {
    throw Error(Errc::input_shape, "encoder expects N x 3 x " + std::to_string(encoder_spec_.input_size) + " x " +
                                       std::to_string(encoder_spec_.input_size) + " input");
  }
  return impl_->encoder->forward(images);
}

torch::Tensor Network::project(const torch::Tensor& features) {
  if (features.dim() != 2 || features.size(1) != encoder_spec_.feature_dim) {
    throw Error(Errc::input_shape, "projector expects width " + std::to_string(encoder_spec_.feature_dim));
  }
  if (projector_spec_.depth == 0) return features;
  return impl_->projector->forward(features);
}

void Network::train(bool on) {
  impl_->encoder->train(on);
  impl_->projector->train(on);
}

bool Network::is_training() const { return impl_->encoder->is_training(); }

std::vector<torch::Tensor> Network::encoder_parameters() const { return impl_->encoder->parameters(); }
std::vector<torch::Tensor> Network::projector_parameters() const { return impl_->projector->parameters(); }

torch::Tensor forward_features(const ModelState& state, const torch::Tensor& images) {
  Network net(state);
  net.train(false);
  torch::NoGradGuard guard;
  return net.encode(images);
}

torch::Tensor forward_projection(const ModelState& state, const torch::Tensor& features) {
  Network net(state);
  net.train(false);
  torch::NoGradGuard guard;
  return net.project(features);
}

}  // namespace sscil
