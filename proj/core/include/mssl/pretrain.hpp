#pragma once

#include <span>
#include <string_view>

#include "mssl/augment.hpp"
#include "mssl/losses.hpp"
#include "mssl/models.hpp"
#include "mssl/sample.hpp"
#include "mssl/training.hpp"
#include "mssl/uad.hpp"

namespace mssl {

enum class PretrainTask { residual, ae, dae };

std::string_view to_string(PretrainTask t);
PretrainTask parse_pretrain_task(std::string_view s);

struct PretrainConfig {
  PretrainTask task = PretrainTask::residual;
  LossKind loss = LossKind::bce;
  EncoderSpec encoder{};
  LarsRecipe recipe{};
  AugmentationPolicy augmentation{};
  double dae_noise_std = 0.6;
};

void validate(const PretrainConfig& cfg);

/// Trains encoder + skip decoder to map each (augmented) volume to its residual.
/// Geometric augmentation is applied to input and target alike; noise to the input only.
/// Throws DataError if an input has no residual with the same id (or vice versa).
TrainResult pretrain_residual(std::span<const UnlabelledItem> volumes, std::span<const ResidualSample> residuals,
                              const PretrainConfig& cfg);

/// Target = the (geometrically augmented) input itself.
TrainResult pretrain_ae(std::span<const UnlabelledItem> volumes, const PretrainConfig& cfg);

/// Input additionally corrupted by N(0, dae_noise_std) at probability 1; target clean.
TrainResult pretrain_dae(std::span<const UnlabelledItem> volumes, const PretrainConfig& cfg);

/// Dispatches on cfg.task (`residuals` ignored unless task == residual).
TrainResult pretrain(std::span<const UnlabelledItem> volumes, std::span<const ResidualSample> residuals,
                     const PretrainConfig& cfg);

/// Rebuilds the encoder + mirrored decoder from a pretraining checkpoint (eval mode).
ResUNet load_pretrained(const Checkpoint& ckpt, const EncoderSpec& encoder);

}  // namespace mssl
