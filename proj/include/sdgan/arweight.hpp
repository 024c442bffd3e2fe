#pragma once

#include <array>
#include <cstdint>

#include "sdgan/autodiff.hpp"
#include "sdgan/image.hpp"

namespace sdgan::ar {

inline constexpr double kCosineEps = 1e-8;

// variance over a class: restricted to the class's own pixels (intra), or the
// literal masked form that also counts the -mu offsets outside the class
enum class VarianceForm { intra, literal };

struct ClassStats {
    std::array<double, data::kNumClasses> mu{};
    std::array<double, data::kNumClasses> nu{};
    std::array<std::int64_t, data::kNumClasses> counts{};
};

struct ARMapStack {
    Tensor bmu;  // {12,h,w}, S(i,j,c)*mu(c)
    Tensor bnu;  // {12,h,w}, S(i,j,c)*nu(c)
};

struct AffinityVector {
    // row 0: sketch vs mu maps, row 1: sketch vs nu maps
    std::array<std::array<double, data::kNumClasses>, 2> c{};
};

Tensor to_single_channel(const Tensor& t);  // channel mean when c > 1

std::array<double, data::kNumClasses> class_mean(const Tensor& sketch,
                                                 const data::SemanticLayout& layout);
std::array<double, data::kNumClasses> class_variance(
    const Tensor& sketch, const data::SemanticLayout& layout,
    const std::array<double, data::kNumClasses>& mu, VarianceForm form = VarianceForm::intra);
ClassStats compute_stats(const Tensor& sketch, const data::SemanticLayout& layout,
                         VarianceForm form = VarianceForm::intra);

ARMapStack build_ar_maps(const ClassStats& stats, const data::SemanticLayout& layout);
AffinityVector affinity(const Tensor& sketch, const ARMapStack& maps);

double ar_loss(const Tensor& target, const Tensor& fake, const data::SemanticLayout& layout,
               VarianceForm form = VarianceForm::intra);

// graph-recording form; gradients flow into fake only
ad::Var ar_loss_var(const Tensor& target, const ad::Var& fake,
                    const data::SemanticLayout& layout,
                    VarianceForm form = VarianceForm::intra);

}  // namespace sdgan::ar
