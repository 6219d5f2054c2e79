#pragma once

#include <cmath>
#include <vector>

#include "tvr/feature_set.hpp"
#include "tvr/flow.hpp"
#include "tvr/video.hpp"

namespace tvr {

struct TrackedTrajectory {
    int start_frame = 0;
    std::vector<std::pair<double, double>> points;  // length L+1
};

struct ExtractParams {
    int sample_step = 5;
    int track_length = 15;        // L
    double prune_threshold = 1.0; // min total displacement over the track
    double drift_cap = 10.0;      // max single-step displacement
    double min_flow = 0.6;        // HOF zero-bin threshold
    int tube_radius = 10;         // descriptor window half-size in pixels
    int cells_xy = 2;
    int cells_t = 3;
    int orientation_bins = 8;
    FlowParams flow;
};

// Per-clip cache of images, gradients and frame-pair flow fields shared by
// tracking and descriptor computation.
struct ClipFlowCache {
    std::vector<Image> frames;
    std::vector<Image> grad_x, grad_y;           // per frame
    std::vector<FlowField> flows;                // per frame pair t -> t+1
    std::vector<Image> flow_x, flow_y;           // dense flow images per pair
    std::vector<Image> mbh_xx, mbh_xy, mbh_yx, mbh_yy;  // gradients of flow components

    ClipFlowCache(const VideoClip& clip, const FlowParams& params) {
        clip.validate();
        const int T = clip.frame_count();
        frames.reserve(T);
        for (int t = 0; t < T; ++t) frames.push_back(to_image(clip, t));
        grad_x.resize(T);
        grad_y.resize(T);
        for (int t = 0; t < T; ++t) gradients(frames[t], grad_x[t], grad_y[t]);
        flows.reserve(std::max(0, T - 1));
        flow_x.resize(std::max(0, T - 1));
        flow_y.resize(std::max(0, T - 1));
        mbh_xx.resize(flow_x.size());
        mbh_xy.resize(flow_x.size());
        mbh_yx.resize(flow_x.size());
        mbh_yy.resize(flow_x.size());
        for (int t = 0; t + 1 < T; ++t) {
            flows.push_back(compute_flow(frames[t], frames[t + 1], params));
            flow_images(flows.back(), flow_x[t], flow_y[t]);
            gradients(flow_x[t], mbh_xx[t], mbh_xy[t]);
            gradients(flow_y[t], mbh_yx[t], mbh_yy[t]);
        }
    }
};

// Dense-grid seeding, flow-based tracking over L frames, static and drift
// pruning. Clips shorter than L+1 frames yield an empty list.
inline std::vector<TrackedTrajectory> extract_trajectories(const VideoClip& clip,
                                                           const ExtractParams& params,
                                                           const ClipFlowCache& cache) {
    const int T = clip.frame_count();
    const int L = params.track_length;
    std::vector<TrackedTrajectory> done;
    if (T < L + 1) return done;

    struct Active {
        TrackedTrajectory traj;
        double x, y;
        double total_disp = 0;
    };
    std::vector<Active> active;
    const int step = params.sample_step;
    const int cells_x = (clip.width + step - 1) / step;
    const int cells_y = (clip.height + step - 1) / step;
    std::vector<char> occupied(static_cast<std::size_t>(cells_x) * cells_y);

    for (int t = 0; t < T; ++t) {
        // seed unoccupied grid cells (only if a full track fits)
        if (t + L < T) {
            std::fill(occupied.begin(), occupied.end(), 0);
            for (const auto& a : active) {
                int cx = std::clamp(static_cast<int>(a.x) / step, 0, cells_x - 1);
                int cy = std::clamp(static_cast<int>(a.y) / step, 0, cells_y - 1);
                occupied[static_cast<std::size_t>(cy) * cells_x + cx] = 1;
            }
            for (int cy = 0; cy < cells_y; ++cy)
                for (int cx = 0; cx < cells_x; ++cx) {
                    if (occupied[static_cast<std::size_t>(cy) * cells_x + cx]) continue;
                    double x = std::min(cx * step + step / 2.0, clip.width - 1.0);
                    double y = std::min(cy * step + step / 2.0, clip.height - 1.0);
                    Active a;
                    a.traj.start_frame = t;
                    a.traj.points.push_back({x, y});
                    a.x = x;
                    a.y = y;
                    active.push_back(std::move(a));
                }
        }
        if (t + 1 >= T) break;

        // advance all live tracks through the t -> t+1 flow
        std::vector<Active> next;
        next.reserve(active.size());
        for (auto& a : active) {
            double u, v;
            cache.flows[t].sample(a.x, a.y, u, v);
            double nx = a.x + u, ny = a.y + v;
            double disp = std::sqrt(u * u + v * v);
            if (disp > params.drift_cap) continue;  // drifting track, drop
            if (nx < 0 || ny < 0 || nx > clip.width - 1 || ny > clip.height - 1) continue;
            a.x = nx;
            a.y = ny;
            a.total_disp += disp;
            a.traj.points.push_back({nx, ny});
            if (static_cast<int>(a.traj.points.size()) == L + 1) {
                if (a.total_disp >= params.prune_threshold) done.push_back(std::move(a.traj));
            } else {
                next.push_back(std::move(a));
            }
        }
        active = std::move(next);
    }
    return done;
}

struct RawDescriptorBundle {
    std::vector<float> traj;  // 2L normalized displacements
    std::vector<float> hog;   // cells_xy^2 * cells_t * bins
    std::vector<float> hof;   // cells_xy^2 * cells_t * (bins + 1), zero bin last
    std::vector<float> mbh;   // x part then y part, each sized like hog
    float x_norm = 0, y_norm = 0, t_norm = 0;
    std::uint32_t frame_index = 0;
};

// L1-normalize then elementwise square root.
inline void rootsift(std::vector<float>& v) {
    double l1 = 0;
    for (float x : v) l1 += std::abs(x);
    if (l1 <= 0) return;
    for (float& x : v) x = static_cast<float>(std::sqrt(std::abs(x) / l1));
}

namespace detail {

inline int orientation_bin(double gx, double gy, int bins) {
    double a = std::atan2(gy, gx);  // [-pi, pi]
    int bin = static_cast<int>((a + 3.14159265358979) / (2 * 3.14159265358979) * bins);
    return std::clamp(bin, 0, bins - 1);
}

}  // namespace detail

// Descriptors over a space-time tube following the trajectory.
inline RawDescriptorBundle compute_descriptors(const TrackedTrajectory& traj,
                                               const VideoClip& clip, const ExtractParams& params,
                                               const ClipFlowCache& cache) {
    const int L = static_cast<int>(traj.points.size()) - 1;
    const int bins = params.orientation_bins;
    const int nxy = params.cells_xy;
    const int nt = params.cells_t;
    const int cells = nxy * nxy * nt;

    RawDescriptorBundle out;

    // trajectory shape: displacements normalized by total magnitude
    double total = 0;
    std::vector<double> disp(2 * static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) {
        double dx = traj.points[i + 1].first - traj.points[i].first;
        double dy = traj.points[i + 1].second - traj.points[i].second;
        disp[2 * i] = dx;
        disp[2 * i + 1] = dy;
        total += std::sqrt(dx * dx + dy * dy);
    }
    if (total <= 0)
        throw DataError("degenerate zero-displacement trajectory reached descriptor stage");
    out.traj.resize(disp.size());
    for (std::size_t i = 0; i < disp.size(); ++i)
        out.traj[i] = static_cast<float>(disp[i] / total);

    out.hog.assign(static_cast<std::size_t>(cells) * bins, 0.f);
    out.hof.assign(static_cast<std::size_t>(cells) * (bins + 1), 0.f);
    std::vector<float> mbhx(static_cast<std::size_t>(cells) * bins, 0.f);
    std::vector<float> mbhy(mbhx.size(), 0.f);

    const int R = params.tube_radius;
    for (int i = 0; i < L; ++i) {
        int t = traj.start_frame + i;
        int tc = std::min(i * nt / L, nt - 1);
        int cx0 = static_cast<int>(std::lround(traj.points[i].first)) - R;
        int cy0 = static_cast<int>(std::lround(traj.points[i].second)) - R;
        const int side = 2 * R;
        for (int wy = 0; wy < side; ++wy) {
            int sy = std::min(wy * nxy / side, nxy - 1);
            int py = cy0 + wy;
            for (int wx = 0; wx < side; ++wx) {
                int sx = std::min(wx * nxy / side, nxy - 1);
                int px = cx0 + wx;
                int cell = (tc * nxy + sy) * nxy + sx;

                double gx = cache.grad_x[t].at(px, py);
                double gy = cache.grad_y[t].at(px, py);
                double gmag = std::sqrt(gx * gx + gy * gy);
                if (gmag > 0)
                    out.hog[static_cast<std::size_t>(cell) * bins +
                            detail::orientation_bin(gx, gy, bins)] += static_cast<float>(gmag);

                double fx = cache.flow_x[t].at(px, py);
                double fy = cache.flow_y[t].at(px, py);
                double fmag = std::sqrt(fx * fx + fy * fy);
                if (fmag < params.min_flow)
                    out.hof[static_cast<std::size_t>(cell) * (bins + 1) + bins] += 1.f;
                else
                    out.hof[static_cast<std::size_t>(cell) * (bins + 1) +
                            detail::orientation_bin(fx, fy, bins)] += static_cast<float>(fmag);

                double bxx = cache.mbh_xx[t].at(px, py), bxy = cache.mbh_xy[t].at(px, py);
                double bmagx = std::sqrt(bxx * bxx + bxy * bxy);
                if (bmagx > 0)
                    mbhx[static_cast<std::size_t>(cell) * bins +
                         detail::orientation_bin(bxx, bxy, bins)] += static_cast<float>(bmagx);
                double byx = cache.mbh_yx[t].at(px, py), byy = cache.mbh_yy[t].at(px, py);
                double bmagy = std::sqrt(byx * byx + byy * byy);
                if (bmagy > 0)
                    mbhy[static_cast<std::size_t>(cell) * bins +
                         detail::orientation_bin(byx, byy, bins)] += static_cast<float>(bmagy);
            }
        }
    }

    rootsift(out.hog);
    rootsift(out.hof);
    rootsift(mbhx);
    rootsift(mbhy);
    out.mbh = mbhx;
    out.mbh.insert(out.mbh.end(), mbhy.begin(), mbhy.end());

    // mean-point location, middle-frame time
    double mx = 0, my = 0;
    for (const auto& p : traj.points) {
        mx += p.first;
        my += p.second;
    }
    mx /= traj.points.size();
    my /= traj.points.size();
    out.x_norm = static_cast<float>(mx / clip.width);
    out.y_norm = static_cast<float>(my / clip.height);
    out.frame_index = static_cast<std::uint32_t>(traj.start_frame + L / 2);
    out.t_norm = static_cast<float>(out.frame_index) / clip.frame_count();
    return out;
}

// Raw (pre-PCA) feature set for one clip. processed_frames counts the frames
// this extraction touched, which TSP accumulates across strides.
inline FeatureSet extract_raw_feature_set(const VideoClip& clip, const ExtractParams& params) {
    ClipFlowCache cache(clip, params.flow);
    auto trajectories = extract_trajectories(clip, params, cache);

    const int L = params.track_length;
    const int bins = params.orientation_bins;
    const int cells = params.cells_xy * params.cells_xy * params.cells_t;
    const std::vector<int> dims{2 * L, cells * bins, cells * (bins + 1), 2 * cells * bins};

    FeatureSet fs;
    fs.channel_names = channel_order();
    fs.clip_frame_count = static_cast<std::uint32_t>(clip.frame_count());
    fs.processed_frames = static_cast<std::uint64_t>(clip.frame_count());
    const Eigen::Index n = static_cast<Eigen::Index>(trajectories.size());
    for (int c = 0; c < 4; ++c) fs.channels.emplace_back(n, dims[c]);
    fs.locations.resize(trajectories.size());

    for (Eigen::Index r = 0; r < n; ++r) {
        auto bundle = compute_descriptors(trajectories[r], clip, params, cache);
        const std::vector<float>* src[4] = {&bundle.traj, &bundle.hog, &bundle.hof, &bundle.mbh};
        for (int c = 0; c < 4; ++c)
            for (int j = 0; j < dims[c]; ++j) fs.channels[c](r, j) = (*src[c])[j];
        auto& loc = fs.locations[r];
        loc.x_norm = bundle.x_norm;
        loc.y_norm = bundle.y_norm;
        loc.t_norm = bundle.t_norm;
        loc.frame_index = bundle.frame_index;
        loc.stride_tag = 0;
    }
    return fs;
}

}  // namespace tvr
