#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tvr/video.hpp"

namespace tvr {

struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> px;

    float at(int x, int y) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return px[static_cast<std::size_t>(y) * width + x];
    }

    float bilinear(double x, double y) const {
        x = std::clamp(x, 0.0, width - 1.0);
        y = std::clamp(y, 0.0, height - 1.0);
        int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
        int x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
        double fx = x - x0, fy = y - y0;
        return static_cast<float>(at(x0, y0) * (1 - fx) * (1 - fy) + at(x1, y0) * fx * (1 - fy) +
                                  at(x0, y1) * (1 - fx) * fy + at(x1, y1) * fx * fy);
    }
};

inline Image to_image(const VideoClip& clip, int t) {
    Image im;
    im.width = clip.width;
    im.height = clip.height;
    im.px.assign(clip.frames[t].begin(), clip.frames[t].end());
    return im;
}

inline Image downsample2(const Image& src) {
    Image out;
    out.width = std::max(1, src.width / 2);
    out.height = std::max(1, src.height / 2);
    out.px.resize(static_cast<std::size_t>(out.width) * out.height);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.px[static_cast<std::size_t>(y) * out.width + x] =
                0.25f * (src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) + src.at(2 * x, 2 * y + 1) +
                         src.at(2 * x + 1, 2 * y + 1));
    return out;
}

// Central-difference gradients.
inline void gradients(const Image& im, Image& gx, Image& gy) {
    gx.width = gy.width = im.width;
    gx.height = gy.height = im.height;
    gx.px.resize(im.px.size());
    gy.px.resize(im.px.size());
    for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * im.width + x;
            gx.px[i] = 0.5f * (im.at(x + 1, y) - im.at(x - 1, y));
            gy.px[i] = 0.5f * (im.at(x, y + 1) - im.at(x, y - 1));
        }
}

// Dense forward flow between consecutive frames, estimated on a coarse grid
// by block matching and interpolated bilinearly in between.
struct FlowField {
    int width = 0, height = 0;   // image size
    int grid_step = 4;
    int grid_w = 0, grid_h = 0;
    std::vector<float> fx, fy;   // grid_w * grid_h

    // flow at an arbitrary image position
    void sample(double x, double y, double& out_x, double& out_y) const {
        double gx = std::clamp(x / grid_step, 0.0, grid_w - 1.0);
        double gy = std::clamp(y / grid_step, 0.0, grid_h - 1.0);
        int x0 = static_cast<int>(gx), y0 = static_cast<int>(gy);
        int x1 = std::min(x0 + 1, grid_w - 1), y1 = std::min(y0 + 1, grid_h - 1);
        double ax = gx - x0, ay = gy - y0;
        auto lerp = [&](const std::vector<float>& f) {
            return f[static_cast<std::size_t>(y0) * grid_w + x0] * (1 - ax) * (1 - ay) +
                   f[static_cast<std::size_t>(y0) * grid_w + x1] * ax * (1 - ay) +
                   f[static_cast<std::size_t>(y1) * grid_w + x0] * (1 - ax) * ay +
                   f[static_cast<std::size_t>(y1) * grid_w + x1] * ax * ay;
        };
        out_x = lerp(fx);
        out_y = lerp(fy);
    }
};

struct FlowParams {
    int grid_step = 4;
    int patch_radius = 4;
    int search_radius = 3;   // per pyramid level, around the coarse guess
    int pyramid_levels = 2;
};

namespace detail {

inline double patch_ssd(const Image& a, const Image& b, int ax, int ay, double bx, double by,
                        int r) {
    double ssd = 0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            double d = a.at(ax + dx, ay + dy) - b.bilinear(bx + dx, by + dy);
            ssd += d * d;
        }
    return ssd;
}

inline double parabolic_offset(double sm, double s0, double sp) {
    if (s0 <= 1e-9) return 0.0;  // exact integer match, nothing to refine
    double denom = sm - 2 * s0 + sp;
    if (denom <= 1e-12) return 0.0;
    return std::clamp(0.5 * (sm - sp) / denom, -0.5, 0.5);
}

}  // namespace detail

inline FlowField compute_flow(const Image& prev, const Image& next, const FlowParams& params) {
    // pyramid
    std::vector<Image> pa{prev}, pb{next};
    for (int l = 1; l < params.pyramid_levels; ++l) {
        if (std::min(pa.back().width, pa.back().height) < 4 * params.grid_step) break;
        pa.push_back(downsample2(pa.back()));
        pb.push_back(downsample2(pb.back()));
    }

    FlowField coarse_guess;  // from the previous (coarser) level
    bool have_guess = false;
    FlowField flow;
    for (int l = static_cast<int>(pa.size()) - 1; l >= 0; --l) {
        const Image& a = pa[l];
        const Image& b = pb[l];
        flow = FlowField{};
        flow.width = a.width;
        flow.height = a.height;
        flow.grid_step = params.grid_step;
        flow.grid_w = std::max(1, (a.width + params.grid_step - 1) / params.grid_step);
        flow.grid_h = std::max(1, (a.height + params.grid_step - 1) / params.grid_step);
        flow.fx.assign(static_cast<std::size_t>(flow.grid_w) * flow.grid_h, 0.f);
        flow.fy.assign(flow.fx.size(), 0.f);

        for (int gy = 0; gy < flow.grid_h; ++gy) {
            for (int gx = 0; gx < flow.grid_w; ++gx) {
                int x = std::min(gx * params.grid_step, a.width - 1);
                int y = std::min(gy * params.grid_step, a.height - 1);
                double ux = 0, uy = 0;
                if (have_guess) {
                    coarse_guess.sample(x / 2.0, y / 2.0, ux, uy);
                    ux *= 2;
                    uy *= 2;
                }
                int bx = static_cast<int>(std::lround(ux));
                int by = static_cast<int>(std::lround(uy));

                const int r = params.search_radius;
                double best = 1e30;
                int bu = 0, bv = 0;
                // SSD over the search window, kept for subpixel refinement
                std::vector<double> ssd(static_cast<std::size_t>(2 * r + 1) * (2 * r + 1));
                for (int v = -r; v <= r; ++v)
                    for (int u = -r; u <= r; ++u) {
                        double s = detail::patch_ssd(a, b, x, y, x + bx + u, y + by + v,
                                                     params.patch_radius);
                        ssd[static_cast<std::size_t>(v + r) * (2 * r + 1) + (u + r)] = s;
                        // tiny total-displacement penalty so textureless
                        // patches (all SSDs tied) resolve to zero motion
                        double du = bx + u, dv = by + v;
                        double score = s + 0.01 * (du * du + dv * dv);
                        if (score < best) {
                            best = score;
                            bu = u;
                            bv = v;
                        }
                    }
                double sub_u = 0, sub_v = 0;
                auto S = [&](int u, int v) {
                    return ssd[static_cast<std::size_t>(v + r) * (2 * r + 1) + (u + r)];
                };
                if (bu > -r && bu < r) sub_u = detail::parabolic_offset(S(bu - 1, bv), S(bu, bv), S(bu + 1, bv));
                if (bv > -r && bv < r) sub_v = detail::parabolic_offset(S(bu, bv - 1), S(bu, bv), S(bu, bv + 1));

                flow.fx[static_cast<std::size_t>(gy) * flow.grid_w + gx] =
                    static_cast<float>(bx + bu + sub_u);
                flow.fy[static_cast<std::size_t>(gy) * flow.grid_w + gx] =
                    static_cast<float>(by + bv + sub_v);
            }
        }
        coarse_guess = flow;
        have_guess = true;
    }
    return flow;
}

// Dense per-pixel flow images (for HOF / MBH), materialized from the grid.
inline void flow_images(const FlowField& flow, Image& fx, Image& fy) {
    fx.width = fy.width = flow.width;
    fx.height = fy.height = flow.height;
    fx.px.resize(static_cast<std::size_t>(flow.width) * flow.height);
    fy.px.resize(fx.px.size());
    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            double u, v;
            flow.sample(x, y, u, v);
            fx.px[static_cast<std::size_t>(y) * flow.width + x] = static_cast<float>(u);
            fy.px[static_cast<std::size_t>(y) * flow.width + x] = static_cast<float>(v);
        }
}

}  // namespace tvr
