#pragma once

#include "retarget/nn/models.hpp"
#include "retarget/nn/tensor.hpp"

namespace retarget::restore {

using nn::Tensor;

struct LossWeights {
    double lambda_lpips = 0.1;
    double lambda_gan = 0.1;
};

// Mean absolute difference. dpred, when given, receives the gradient.
double l1_loss(const Tensor& pred, const Tensor& target, Tensor* dpred = nullptr);

// Perceptual distance: per feature level, channel-unit-normalize at every
// location, then take the mean squared difference; levels are summed.
double lpips_loss(const Tensor& pred, const Tensor& target, nn::FeatureNet& feat,
                  Tensor* dpred = nullptr);

struct GanLosses {
    double g_loss;
    double d_loss;
};

// Evaluates both adversarial objectives without touching gradients.
// g_loss: mean log(1 - D(fake)), or -mean log D(fake) when saturating=false.
// d_loss: mean -log(1 - D(fake)) + mean -log D(real).
GanLosses gan_losses(nn::DiscriminatorNet& d, const Tensor& fake, const Tensor& real,
                     bool saturating = true);

// Generator-side loss with gradient into the fake batch. The backward pass
// also deposits gradients on the discriminator's parameters; zero them before
// the next discriminator update.
double gan_generator_loss(nn::DiscriminatorNet& d, const Tensor& fake, bool saturating,
                          Tensor* dfake);

// Discriminator loss; accumulates parameter gradients on d (fake and real
// passes). Input gradients are discarded.
double gan_discriminator_loss(nn::DiscriminatorNet& d, const Tensor& fake, const Tensor& real);

// Weighted sum: L1 + lambda_lpips * LPIPS + lambda_gan * generator GAN term.
// d may be null only when lambda_gan is zero.
double total_loss(const Tensor& pred, const Tensor& target, nn::DiscriminatorNet* d,
                  nn::FeatureNet& feat, const LossWeights& w, bool saturating = true,
                  Tensor* dpred = nullptr);

}  // namespace retarget::restore
