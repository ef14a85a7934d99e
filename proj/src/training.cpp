// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "counting.hpp"
#include "log.hpp"
#include "nn/checkpoint.hpp"

namespace acss {

using nn::Mat;

namespace {

void check_pit_shapes(const MaskPair& masks, const RealGrid& mix,
                      const std::array<RealGrid, 2>& refs) {
  for (int i = 0; i < 2; ++i) {
    require(masks[i].rows() == mix.rows() && masks[i].cols() == mix.cols(),
            "mask shape does not match the mixture magnitude");
    require(refs[i].rows() == mix.rows() && refs[i].cols() == mix.cols(),
            "reference shape does not match the mixture magnitude");
  }
  require(mix.size() > 0, "empty spectrogram");
}

}  // namespace

double permutation_mse(const MaskPair& masks, const RealGrid& mix_mag,
                       const std::array<RealGrid, 2>& ref_mags, Permutation perm) {
  check_pit_shapes(masks, mix_mag, ref_mags);
  // Sequential accumulation in storage order keeps the value reproducible
  // independent of vectorization.
  double sum = 0.0;
  const Eigen::Index n = mix_mag.size();
  const double* x = mix_mag.data();
  for (int i = 0; i < 2; ++i) {
    const double* m = masks[i].data();
    const double* r = ref_mags[perm[i]].data();
    for (Eigen::Index k = 0; k < n; ++k) {
      const double e = m[k] * x[k] - r[k];
      sum += e * e;
    }
  }
  return sum / (2.0 * static_cast<double>(n));
}

PitResult pit_mse_loss(const MaskPair& masks, const RealGrid& mix_mag,
                       const std::array<RealGrid, 2>& ref_mags, bool with_grad) {
  const double id = permutation_mse(masks, mix_mag, ref_mags, kIdentityPerm);
  const double sw = permutation_mse(masks, mix_mag, ref_mags, kSwapPerm);
  PitResult r;
  r.permutation = sw < id ? kSwapPerm : kIdentityPerm;
  r.loss = std::min(id, sw);
  if (with_grad) {
    const double k = 2.0 / (2.0 * static_cast<double>(mix_mag.size()));
    for (int i = 0; i < 2; ++i)
      r.grad[i] = (k * ((masks[i].array() * mix_mag.array()) -
                        ref_mags[r.permutation[i]].array()) *
                   mix_mag.array())
                      .matrix();
  }
  return r;
}

AdamState make_adam_state(const nn::ModelParameters& params) {
  AdamState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void optimizer_step(nn::ModelParameters& params, const nn::GradientSet& grads,
                    AdamState& state, const AdamConfig& hyper) {
  require(grads.size() == params.size() && state.m.size() == params.size() &&
              state.v.size() == params.size(),
          "optimizer state does not match the parameter set");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    require(grads[i].rows() == params.value(i).rows() &&
                grads[i].cols() == params.value(i).cols(),
            "gradient shape mismatch for '" + params.name(i) + "'");
    if (!grads[i].allFinite())
      fail(ErrorCode::kNumeric, "non-finite gradient for '" + params.name(i) + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i].cwiseProduct(grads[i]);
    params.mutable_value(i).array() -=
        hyper.learning_rate * (state.m[i].array() / c1) /
        ((state.v[i].array() / c2).sqrt() + hyper.epsilon);
  }
  params.bump_version();
}

TrainingSample to_training_sample(std::string id, const MixtureSample& sample) {
  TrainingSample t;
  t.id = std::move(id);
  t.mixture = sample.mixture;
  t.refs = sample.clean_refs;
  t.activity = sample.activity;
  t.count_labels = sample.count_labels;
  return t;
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) fail(ErrorCode::kIo, "cannot open manifest: " + manifest.string());
  const auto base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string id = manifest.string() + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      id = j.at("id").get<std::string>();
      TrainingSample s;
      s.id = id;
      for (const auto& ch : j.at("channels")) s.mixture.channels.push_back(read_wav(resolve(ch)));
      require(!s.mixture.channels.empty(), "sample has no channels");
      const auto& refs = j.at("refs");
      require(refs.size() == 2, "sample must list two references");
      for (int i = 0; i < 2; ++i) s.refs[i] = read_wav(resolve(refs[i]));
      std::ifstream lf(resolve(j.at("labels").get<std::string>()));
      if (!lf) fail(ErrorCode::kIo, "cannot open labels");
      const auto labels = nlohmann::json::parse(lf);
      s.activity[0] = labels.at("activity").at(0).get<std::vector<int>>();
      s.activity[1] = labels.at("activity").at(1).get<std::vector<int>>();
      s.count_labels = labels.at("count").get<std::vector<int>>();
      ds.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      log_warn("skipping sample " + id + ": " + e.what());
      ds.skipped.push_back(id);
    }
  }
  return ds;
}

void validate(const TrainConfig& cfg) {
  require(cfg.epochs >= 1, "epochs must be >= 1", ErrorCode::kConfig);
  require(cfg.batch_size >= 1, "batch_size must be >= 1", ErrorCode::kConfig);
  require(cfg.validate_every >= 1, "validate_every must be >= 1", ErrorCode::kConfig);
  require(!cfg.patience || *cfg.patience >= 1, "patience must be >= 1", ErrorCode::kConfig);
  require(!cfg.max_channels || *cfg.max_channels >= 1, "max_channels must be >= 1",
          ErrorCode::kConfig);
  require(cfg.crop_s > 0.0, "crop_s must be positive", ErrorCode::kConfig);
  require(cfg.adam.learning_rate > 0.0, "learning_rate must be positive", ErrorCode::kConfig);
  validate(cfg.stft);
}

namespace {

RealGrid crop_rows(const RealGrid& g, std::size_t offset, std::size_t frames) {
  return g.middleRows(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(frames));
}

std::vector<int> crop_labels(const std::vector<int>& v, std::size_t offset, std::size_t frames) {
  std::vector<int> out(frames, 0);
  for (std::size_t t = 0; t < frames && offset + t < v.size(); ++t) out[t] = v[offset + t];
  return out;
}

}  // namespace

TrainingExample make_example(const TrainingSample& sample, const nn::NetConfig& net_cfg,
                             const TrainConfig& cfg, std::mt19937_64& rng, bool random_crop) {
  const auto& mix = sample.mixture;
  require(mix.num_channels() > cfg.ref_channel,
          "sample " + sample.id + " lacks the reference channel");
  std::size_t len = mix.min_length();
  for (const auto& r : sample.refs) len = std::min(len, r.size());
  require(len >= cfg.stft.fft_size, "sample " + sample.id + " is shorter than one frame");

  const std::size_t total = num_frames(len, cfg.stft);
  const auto crop_samples =
      static_cast<std::size_t>(std::llround(cfg.crop_s * mix.sample_rate()));
  const std::size_t frames =
      std::min(total, num_frames(std::max(crop_samples, cfg.stft.fft_size), cfg.stft));
  std::size_t offset = 0;
  if (random_crop && total > frames)
    offset = std::uniform_int_distribution<std::size_t>(0, total - frames)(rng);

  std::vector<std::size_t> chans;
  if (net_cfg.head != nn::CountHead::kNone) {
    chans.push_back(cfg.ref_channel);
  } else {
    chans.push_back(cfg.ref_channel);
    std::vector<std::size_t> others;
    for (std::size_t c = 0; c < mix.num_channels(); ++c)
      if (c != cfg.ref_channel) others.push_back(c);
    if (cfg.max_channels && others.size() + 1 > *cfg.max_channels) {
      std::shuffle(others.begin(), others.end(), rng);
      others.resize(*cfg.max_channels - 1);
      std::sort(others.begin(), others.end());
    }
    chans.insert(chans.end(), others.begin(), others.end());
  }

  // Frames depend only on their own samples, so cropping the spectrogram of
  // the whole clip equals the spectrogram of a hop-aligned sample crop.
  auto spec_mag = [&](const AudioClip& clip) {
    std::span<const double> s(clip.samples.data(), len);
    return crop_rows(magnitude(stft(s, cfg.stft)), offset, frames);
  };
  TrainingExample ex;
  for (std::size_t c : chans) ex.input.channels.push_back(spec_mag(mix.channels[c]));
  ex.mix_mag = ex.input.channels[0];
  for (int i = 0; i < 2; ++i) {
    ex.ref_mags[i] = spec_mag(sample.refs[i]);
    ex.activity[i] = crop_labels(sample.activity[i], offset, frames);
  }
  ex.count_labels = crop_labels(sample.count_labels, offset, frames);
  return ex;
}

double example_loss(const nn::SpatioTemporalNet& net, const TrainingExample& ex,
                    nn::GradientSet* grads) {
  nn::SpatioTemporalNet::Cache cache;
  const auto out = net.forward(ex.input, cache);
  const auto head = net.config().head;
  if (head == nn::CountHead::kNone) {
    const PitResult pit = pit_mse_loss(out.masks, ex.mix_mag, ex.ref_mags, grads != nullptr);
    if (grads) net.backward(cache, pit.grad, nullptr, *grads);
    return pit.loss;
  }
  const CountLoss cl = count_loss(head, out.head, ex.activity, ex.count_labels, out.masks,
                                  ex.mix_mag, ex.ref_mags, grads != nullptr);
  if (grads) net.backward(cache, cl.mask_grad, &cl.head_grad, *grads);
  return cl.total;
}

std::string to_json_line(const EpochMetrics& m) {
  nlohmann::json j;
  j["epoch"] = m.epoch;
  j["train_loss"] = m.train_loss;
  j["val_loss"] = m.val_loss ? nlohmann::json(*m.val_loss) : nlohmann::json(nullptr);
  j["wall_time_s"] = m.wall_time_s;
  return j.dump();
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348;
constexpr std::uint64_t kCropStream = 0x4352;
constexpr std::uint64_t kValStream = 0x5641;

double evaluate_set(const nn::SpatioTemporalNet& net, const Dataset& set,
                    const TrainConfig& cfg) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    std::mt19937_64 rng(derive_seed(derive_seed(cfg.seed, kValStream), i));
    try {
      const auto ex = make_example(set.samples[i], net.config(), cfg, rng, false);
      sum += example_loss(net, ex, nullptr);
      ++n;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNumeric) throw;
      log_warn("skipping validation sample " + set.samples[i].id + ": " + e.what());
    }
  }
  if (n == 0) fail(ErrorCode::kInvalidArgument, "validation set produced no usable samples");
  return sum / static_cast<double>(n);
}

std::string epoch_name(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03zu.ckpt", epoch);
  return buf;
}

}  // namespace

TrainResult train(const nn::NetConfig& net_cfg, const Dataset& train_set,
                  const Dataset* val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  validate(cfg);
  nn::validate(net_cfg);
  if (train_set.samples.empty())
    fail(ErrorCode::kInvalidArgument, "empty epoch: the training set has no usable samples");

  nn::SpatioTemporalNet net(net_cfg);
  AdamState adam = make_adam_state(net.params());
  TrainResult result{net, net, {}, 0, kInf, false};

  std::ofstream metrics;
  if (cfg.out_dir) {
    std::filesystem::create_directories(*cfg.out_dir);
    metrics.open(*cfg.out_dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics) fail(ErrorCode::kIo, "cannot write metrics log in " + cfg.out_dir->string());
  }

  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(train_set.samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(derive_seed(derive_seed(cfg.seed, kShuffleStream), epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t used = 0;
    nn::GradientSet grads = net.params().zeros_like();
    std::size_t in_batch = 0;
    auto flush = [&] {
      if (in_batch == 0) return;
      nn::scale(grads, 1.0 / static_cast<double>(in_batch));
      optimizer_step(net.params(), grads, adam, cfg.adam);
      for (auto& g : grads) g.setZero();
      in_batch = 0;
    };
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& sample = train_set.samples[order[k]];
      std::mt19937_64 crop_rng(
          derive_seed(derive_seed(derive_seed(cfg.seed, kCropStream), epoch), order[k]));
      TrainingExample ex;
      try {
        ex = make_example(sample, net_cfg, cfg, crop_rng, true);
      } catch (const Error& e) {
        log_warn("skipping sample " + sample.id + ": " + e.what());
        continue;
      }
      loss_sum += example_loss(net, ex, &grads);
      ++used;
      if (++in_batch == cfg.batch_size) flush();
    }
    flush();
    if (used == 0) fail(ErrorCode::kInvalidArgument, "empty epoch " + std::to_string(epoch));

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(used);
    const bool validate_now = (epoch % cfg.validate_every == 0) || epoch == cfg.epochs;
    if (val_set && validate_now) m.val_loss = evaluate_set(net, *val_set, cfg);
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(m);

    if (cfg.out_dir) {
      nn::save_checkpoint(*cfg.out_dir / epoch_name(epoch), net);
      metrics << to_json_line(m) << '\n' << std::flush;
    }
    log_info("epoch " + std::to_string(epoch) + " train " + std::to_string(m.train_loss) +
             (m.val_loss ? " val " + std::to_string(*m.val_loss) : std::string()));
    if (on_epoch) on_epoch(m);

    std::optional<double> selection = val_set ? m.val_loss : std::optional<double>(m.train_loss);
    if (selection) {
      if (*selection < result.best_loss) {
        result.best_loss = *selection;
        result.best_epoch = epoch;
        result.best = net;
        since_best = 0;
      } else if (cfg.patience && ++since_best >= *cfg.patience) {
        result.stopped_early = true;
        result.last = net;
        break;
      }
    }
    result.last = net;
  }
  if (cfg.out_dir) {
    nn::save_checkpoint(*cfg.out_dir / "best.ckpt", result.best);
    nn::save_checkpoint(*cfg.out_dir / "last.ckpt", result.last);
  }
  return result;
}

}  // namespace acss
