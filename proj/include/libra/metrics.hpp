#pragma once

#include <array>
#include <vector>

#include "libra/grid.hpp"
#include "libra/image.hpp"

namespace libra {

// 10*log10(1/MSE) with peak 1.0, capped at 99 dB when MSE < 1e-12.
double psnr(const Frame& a, const Frame& b);

// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// dynamic range 1.0, computed per channel on the valid interior and
// averaged.
double ssim(const Frame& a, const Frame& b);

// Mean over transitions of the l1 difference between frame t and frame t-1
// warped forward by flow t-1, averaged over in-bounds pixels only.
double tof(const std::vector<Frame>& frames, const std::vector<FlowField>& flows);

struct GridSimilarity {
    double rel_frob = 0.0;
    double pearson = 0.0;
};

// rel_frob = ||a - b||_F / ||b||_F (b anchors); pearson over the flattened
// coefficients. Throws ZeroAnchor when ||b||_F < 1e-12.
GridSimilarity grid_similarity(const ChromaticGrid& a, const ChromaticGrid& b);
GridSimilarity grid_similarity(const TemporalGrid& a, const TemporalGrid& b);
GridSimilarity grid_similarity_raw(const std::vector<double>& a, const std::vector<double>& b);

// l2 norm over the spatial axes for each (color bin, coefficient channel)
// pair; row = bin, column = channel.
std::vector<std::array<double, kCoeffChannels>> per_bin_norms(const ChromaticGrid& grid);

struct MetricReport {
    double psnr = 0.0;  // mean of per_frame_psnr
    double ssim = 0.0;
    std::vector<double> per_frame_psnr;
    double sigma_psnr = 0.0;  // population std of per_frame_psnr
    double tof = -1.0;        // -1 when no flow was supplied
};

// Per-frame PSNR/SSIM between two equal-length frame sequences, plus tOF
// when flow is available.
MetricReport compute_report(const std::vector<Frame>& pred, const std::vector<Frame>& ref,
                            const std::vector<FlowField>* flows = nullptr);

}  // namespace libra
