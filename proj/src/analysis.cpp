#include "impnet/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "impnet/io.hpp"

namespace impnet {

namespace {

// Flattened weights of filter k within a packed conv filter bank.
std::vector<double> filter_weights(const ConvLayer& conv, std::size_t k) {
    const std::size_t per_filter =
        conv.filter_height * conv.filter_width * conv.in_maps;
    const double* base = conv.filters.data() + per_filter * k;
    return std::vector<double>(base, base + per_filter);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    return denom > 0.0 ? dot / denom : 0.0;
}

void require_imp_architecture(const Network& net) {
    if (net.layer_count() < 2 ||
        (net.layer_spec(0).kind != LayerKind::ConvTime &&
         net.layer_spec(0).kind != LayerKind::ConvFreq) ||
        net.layer_spec(1).kind != LayerKind::IntermapPool) {
        throw ShapeError(
            "analysis taps need a convolution followed by an intermap pool "
            "as the first two layers");
    }
}

double relative_l2(const Tensor& a, const Tensor& b) {
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        diff += d * d;
        ref += b.values()[i] * b.values()[i];
    }
    if (ref == 0.0) return diff == 0.0 ? 0.0 : std::sqrt(diff);
    return std::sqrt(diff / ref);
}

}  // namespace

GroupCoherenceReport group_coherence(const Network& net) {
    require_imp_architecture(net);
    const ConvLayer& conv = net.conv_at(0);
    const LayerSpec& pool = net.layer_spec(1);
    const std::size_t K = conv.out_maps;
    const std::size_t r = pool.r, stride = pool.stride;
    const std::size_t groups = (K - r) / stride + 1;

    std::vector<std::vector<double>> weights(K);
    for (std::size_t k = 0; k < K; ++k) weights[k] = filter_weights(conv, k);

    GroupCoherenceReport report;
    report.group_size = r;
    report.stride = stride;

    double within_sum = 0.0;
    std::size_t within_groups = 0;
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t first = g * stride;
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t a = first; a < first + r; ++a) {
            for (std::size_t b = a + 1; b < first + r; ++b) {
                sum += cosine(weights[a], weights[b]);
                ++pairs;
            }
        }
        const double mean = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
        report.per_group.push_back(mean);
        if (pairs > 0) {
            within_sum += mean;
            ++within_groups;
        }
    }
    report.within_mean =
        within_groups > 0 ? within_sum / static_cast<double>(within_groups) : 0.0;

    // Across-group pairs: filters that never share a group, i.e. map
    // indices at least r apart under stride-1 overlap, or in different
    // disjoint blocks under stride r.
    double across_sum = 0.0;
    std::size_t across_pairs = 0;
    for (std::size_t a = 0; a < K; ++a) {
        for (std::size_t b = a + 1; b < K; ++b) {
            const bool share_group =
                stride == 1 ? (b - a) < r : (a / stride) == (b / stride);
            if (share_group) continue;
            across_sum += cosine(weights[a], weights[b]);
            ++across_pairs;
        }
    }
    report.across_mean =
        across_pairs > 0 ? across_sum / static_cast<double>(across_pairs) : 0.0;
    report.gap = report.within_mean - report.across_mean;
    return report;
}

InvarianceReport shift_invariance(const Network& net,
                                  const std::vector<PatternClass>& classes,
                                  int max_shift) {
    require_imp_architecture(net);
    if (max_shift < 1) throw ShapeError("shift_invariance needs max_shift >= 1");

    InvarianceReport report;
    GaussianSource no_noise(0, 0.0, 0.0);

    std::vector<Tensor> pre0(classes.size()), post0(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const SynthSample base = render(classes[c], 0, no_noise);
        auto taps = net.forward_all(base.tensor);
        pre0[c] = std::move(taps[0]);
        post0[c] = std::move(taps[1]);
    }

    for (int s = 1; s <= max_shift; ++s) {
        double pre_sum = 0.0, post_sum = 0.0;
        std::size_t count = 0;
        for (std::size_t c = 0; c < classes.size(); ++c) {
            for (int sign : {+1, -1}) {
                std::size_t clipped = 0;
                const SynthSample shifted =
                    render(classes[c], sign * s, no_noise, &clipped);
                auto taps = net.forward_all(shifted.tensor);
                pre_sum += relative_l2(taps[0], pre0[c]);
                post_sum += relative_l2(taps[1], post0[c]);
                ++count;
            }
        }
        const double pre = pre_sum / static_cast<double>(count);
        const double post = post_sum / static_cast<double>(count);
        report.shifts.push_back(s);
        report.pre_mean.push_back(pre);
        report.post_mean.push_back(post);
        report.ratio.push_back(pre > 0.0 ? post / pre : (post == 0.0 ? 1.0 : HUGE_VAL));
    }
    return report;
}

std::size_t export_filters(const Network& net, std::size_t layer_index,
                           const std::filesystem::path& dir) {
    const ConvLayer& conv = net.conv_at(layer_index);
    std::filesystem::create_directories(dir);

    // Group labels come from the next layer's intermap spec when present.
    std::size_t group_stride = 0;
    if (layer_index + 1 < net.layer_count() &&
        net.layer_spec(layer_index + 1).kind == LayerKind::IntermapPool) {
        group_stride = net.layer_spec(layer_index + 1).stride;
    }

    const std::size_t M = conv.filter_height, N = conv.filter_width, G = conv.in_maps;
    for (std::size_t k = 0; k < conv.out_maps; ++k) {
        const std::size_t group = group_stride > 0 ? k / group_stride : 0;
        char stem[64];
        std::snprintf(stem, sizeof stem, "L%02zu_g%02zu_m%02zu", layer_index + 1, group,
                      k);

        // Filter k as an (M, N, G) tensor for the CSV round trip.
        Tensor filter(Shape(M, N, G));
        const std::size_t per_filter = M * N * G;
        const double* src = conv.filters.data() + per_filter * k;
        std::copy(src, src + per_filter, filter.data());
        export_tensor_csv(dir / (std::string(stem) + ".csv"), filter);

        // PGM image: width N, height M*G (input maps stacked vertically).
        double lo = filter.values()[0], hi = filter.values()[0];
        for (double v : filter.values()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        std::ostringstream pgm;
        pgm << "P5\n" << N << " " << M * G << "\n255\n";
        for (std::size_t g = 0; g < G; ++g) {
            for (std::size_t m = 0; m < M; ++m) {
                for (std::size_t n = 0; n < N; ++n) {
                    const double v = filter.at(m, n, g);
                    int pixel = 0;
                    if (hi > lo) {
                        pixel = static_cast<int>(
                            std::lround((v - lo) / (hi - lo) * 255.0));
                    }
                    pgm.put(static_cast<char>(pixel));
                }
            }
        }
        write_file_atomic(dir / (std::string(stem) + ".pgm"), pgm.str());
    }
    return conv.out_maps;
}

void write_reports_jsonl(const std::filesystem::path& path,
                         const std::optional<GroupCoherenceReport>& coherence,
                         const std::optional<InvarianceReport>& invariance) {
    std::ostringstream out;
    if (coherence) {
        nlohmann::json rec;
        rec["metric"] = "group_coherence";
        rec["within_mean"] = coherence->within_mean;
        rec["across_mean"] = coherence->across_mean;
        rec["gap"] = coherence->gap;
        rec["group_size"] = coherence->group_size;
        rec["stride"] = coherence->stride;
        rec["per_group"] = coherence->per_group;
        out << rec.dump() << "\n";
    }
    if (invariance) {
        for (std::size_t i = 0; i < invariance->shifts.size(); ++i) {
            nlohmann::json rec;
            rec["metric"] = "shift_invariance";
            rec["shift"] = invariance->shifts[i];
            rec["pre_distance"] = invariance->pre_mean[i];
            rec["post_distance"] = invariance->post_mean[i];
            rec["ratio"] = invariance->ratio[i];
            out << rec.dump() << "\n";
        }
    }
    write_file_atomic(path, out.str());
}

}  // namespace impnet
