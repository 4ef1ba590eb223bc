#include "vsc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vsc/align.hpp"
#include "vsc/io_util.hpp"
#include "vsc/kernels.hpp"
#include "vsc/rng.hpp"

namespace vsc {

namespace {

std::string loc(const std::filesystem::path& path, std::size_t line_no) {
    return path.filename().string() + ":" + std::to_string(line_no);
}

/// Parses a CSV of doubles with an optional leading integer column.
Matrix parse_numeric_csv(const std::filesystem::path& path, bool leading_int,
                         std::vector<int>* leading_out) {
    const auto lines = read_lines(path);
    Matrix m;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto fields = split_csv_line(lines[i]);
        const std::size_t first = leading_int ? 1 : 0;
        if (fields.size() <= first)
            throw std::invalid_argument(loc(path, i + 1) + ": too few columns");
        if (leading_int) leading_out->push_back(parse_int(fields[0], loc(path, i + 1)));
        std::vector<double> row;
        row.reserve(fields.size() - first);
        for (std::size_t f = first; f < fields.size(); ++f)
            row.push_back(parse_double(fields[f], loc(path, i + 1)));
        if (rows.empty()) {
            width = row.size();
        } else if (row.size() != width) {
            throw std::invalid_argument(loc(path, i + 1) + ": expected " + std::to_string(width) +
                                        " values, got " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument(path.string() + ": no data rows");
    Matrix out(rows.size(), width);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c) out(r, c) = rows[r][c];
    return out;
}

std::vector<int> parse_int_list(std::string_view text, const std::string& where) {
    std::vector<int> out;
    std::istringstream ss{std::string(text)};
    std::string tok;
    while (ss >> tok) out.push_back(parse_int(tok, where));
    return out;
}

ClassSplit parse_split(const std::filesystem::path& path) {
    ClassSplit split;
    bool saw_seen = false, saw_unseen = false;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string_view::npos)
            throw std::invalid_argument(loc(path, i + 1) + ": expected 'key: values'");
        const auto key = trim(line.substr(0, colon));
        const auto rest = line.substr(colon + 1);
        if (key == "seen") {
            split.seen = parse_int_list(rest, loc(path, i + 1));
            saw_seen = true;
        } else if (key == "unseen") {
            split.unseen = parse_int_list(rest, loc(path, i + 1));
            saw_unseen = true;
        } else if (key == "test_seen_rows") {
            for (int v : parse_int_list(rest, loc(path, i + 1))) {
                if (v < 0) throw std::invalid_argument(loc(path, i + 1) + ": negative row index");
                split.test_seen_rows.push_back(static_cast<std::size_t>(v));
            }
        } else {
            throw std::invalid_argument(loc(path, i + 1) + ": unknown key '" + std::string(key) + "'");
        }
    }
    if (!saw_seen || !saw_unseen)
        throw std::invalid_argument(path.string() + ": needs both 'seen:' and 'unseen:' lines");
    return split;
}

void append_matrix_csv(std::string& out, const Matrix& m, const std::vector<int>* leading) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (leading) {
            out += std::to_string((*leading)[r]);
            out += ',';
        }
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            out += format_double(m(r, c));
        }
        out += '\n';
    }
}

void append_id_line(std::string& out, const std::string& key, const std::vector<int>& ids) {
    out += key;
    out += ':';
    for (int id : ids) {
        out += ' ';
        out += std::to_string(id);
    }
    out += '\n';
}

}  // namespace

std::size_t AttributeTable::row_of(int class_id) const {
    for (std::size_t i = 0; i < class_ids.size(); ++i)
        if (class_ids[i] == class_id) return i;
    throw std::invalid_argument("no attributes for class " + std::to_string(class_id));
}

Matrix AttributeTable::rows_for(const std::vector<int>& classes) const {
    Matrix out(classes.size(), attr_dim());
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto src = attributes.row(row_of(classes[i]));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

void ClassSplit::validate() const {
    if (seen.empty()) throw std::invalid_argument("split: no seen classes");
    if (unseen.empty()) throw std::invalid_argument("split: no unseen classes");
    std::set<int> ids;
    for (int c : seen)
        if (!ids.insert(c).second)
            throw std::invalid_argument("split: duplicate class " + std::to_string(c));
    for (int c : unseen)
        if (!ids.insert(c).second)
            throw std::invalid_argument("split: class " + std::to_string(c) +
                                        " duplicated or in both seen and unseen");
    std::set<std::size_t> rows;
    for (std::size_t r : test_seen_rows)
        if (!rows.insert(r).second)
            throw std::invalid_argument("split: duplicate test_seen_row " + std::to_string(r));
}

Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options) {
    Dataset data;

    std::vector<int> seen_labels;
    data.source.features = parse_numeric_csv(dir / "features_seen.csv", true, &seen_labels);
    data.source.labels = std::move(seen_labels);

    data.target.features = parse_numeric_csv(dir / "features_unseen.csv", false, nullptr);

    const auto unseen_label_path = dir / "labels_unseen.csv";
    if (std::filesystem::exists(unseen_label_path)) {
        std::vector<int> labels;
        const auto lines = read_lines(unseen_label_path);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (trim(lines[i]).empty()) continue;
            labels.push_back(parse_int(lines[i], loc(unseen_label_path, i + 1)));
        }
        data.target.labels = std::move(labels);
    }

    data.attributes.attributes =
        parse_numeric_csv(dir / "attributes.csv", true, &data.attributes.class_ids);

    data.split = parse_split(dir / "split.txt");
    data.split.validate();

    if (data.source.features.cols() != data.target.features.cols())
        throw std::invalid_argument("feature dimension differs between seen and unseen files");

    std::set<int> attr_ids;
    for (int id : data.attributes.class_ids)
        if (!attr_ids.insert(id).second)
            throw std::invalid_argument("attributes.csv: duplicate class " + std::to_string(id));
    for (int id : data.split.seen)
        if (!attr_ids.count(id))
            throw std::invalid_argument("attributes.csv: missing seen class " + std::to_string(id));
    for (int id : data.split.unseen)
        if (!attr_ids.count(id))
            throw std::invalid_argument("attributes.csv: missing unseen class " + std::to_string(id));
    std::set<int> split_ids(data.split.seen.begin(), data.split.seen.end());
    split_ids.insert(data.split.unseen.begin(), data.split.unseen.end());
    for (int id : data.attributes.class_ids)
        if (!split_ids.count(id))
            throw std::invalid_argument("attributes.csv: unknown class id " + std::to_string(id));

    const std::set<int> seen_set(data.split.seen.begin(), data.split.seen.end());
    for (int label : *data.source.labels)
        if (!seen_set.count(label))
            throw std::invalid_argument("features_seen.csv: label " + std::to_string(label) +
                                        " is not a seen class");

    if (data.target.labels) {
        if (data.target.labels->size() != data.target.count())
            throw std::invalid_argument("labels_unseen.csv: " + std::to_string(data.target.labels->size()) +
                                        " labels for " + std::to_string(data.target.count()) + " rows");
        const std::set<int> unseen_set(data.split.unseen.begin(), data.split.unseen.end());
        for (int label : *data.target.labels)
            if (!unseen_set.count(label))
                throw std::invalid_argument("labels_unseen.csv: label " + std::to_string(label) +
                                            " is not an unseen class");
    }

    for (std::size_t r : data.split.test_seen_rows)
        if (r >= data.source.count())
            throw std::invalid_argument("split: test_seen_row " + std::to_string(r) + " out of range");

    if (options.normalize) {
        data.source.features = l2_normalize_rows(data.source.features);
        data.target.features = l2_normalize_rows(data.target.features);
        data.attributes.attributes = l2_normalize_rows(data.attributes.attributes);
    }
    return data;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
    if (!data.source.labels) throw std::invalid_argument("save_dataset: source labels required");
    std::filesystem::create_directories(dir);

    std::string seen;
    append_matrix_csv(seen, data.source.features, &*data.source.labels);
    write_text_file(dir / "features_seen.csv", seen);

    std::string unseen;
    append_matrix_csv(unseen, data.target.features, nullptr);
    write_text_file(dir / "features_unseen.csv", unseen);

    if (data.target.labels) {
        std::string labels;
        for (int l : *data.target.labels) {
            labels += std::to_string(l);
            labels += '\n';
        }
        write_text_file(dir / "labels_unseen.csv", labels);
    }

    std::string attrs;
    append_matrix_csv(attrs, data.attributes.attributes, &data.attributes.class_ids);
    write_text_file(dir / "attributes.csv", attrs);

    std::string split;
    append_id_line(split, "seen", data.split.seen);
    append_id_line(split, "unseen", data.split.unseen);
    if (!data.split.test_seen_rows.empty()) {
        split += "test_seen_rows:";
        for (std::size_t r : data.split.test_seen_rows) {
            split += ' ';
            split += std::to_string(r);
        }
        split += '\n';
    }
    write_text_file(dir / "split.txt", split);
}

CenterSet compute_real_centers(const LabeledFeatureSet& data, const std::vector<int>& classes) {
    if (!data.labels) throw std::invalid_argument("compute_real_centers: unlabeled data");
    CenterSet out;
    out.centers = Matrix(classes.size(), data.dim());
    out.class_ids = classes;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        std::size_t n = 0;
        auto acc = out.centers.row(i);
        for (std::size_t r = 0; r < data.count(); ++r) {
            if ((*data.labels)[r] != classes[i]) continue;
            const auto row = data.features.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) acc[c] += row[c];
            ++n;
        }
        if (n == 0)
            throw std::invalid_argument("compute_real_centers: no instances of class " +
                                        std::to_string(classes[i]));
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] /= static_cast<double>(n);
    }
    return out;
}

Matrix l2_normalize_rows(const Matrix& m) {
    const auto norms = kernels::row_norms(m);
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (norms[r] == 0.0)
            throw std::invalid_argument("l2_normalize_rows: zero row " + std::to_string(r));
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c) / norms[r];
    }
    return out;
}

namespace {

// Unit attribute vectors drawn uniformly on the sphere. A spherical draw
// keeps the attribute covariance near-isotropic, so a model fitting the seen
// classes improves every attribute direction at a similar rate instead of
// leaving some unseen classes poorly predicted for most of training. Draws
// landing too close to an already-accepted class are rejected.
Matrix draw_attributes(const SynthParams& p, std::uint64_t seed) {
    const std::size_t total = p.seen + p.unseen;
    constexpr double kMinAttrDist = 0.5;
    Rng rng(derive_seed(seed, "synth-attr"));
    Matrix attrs(total, p.attr_dim);
    for (std::size_t cls = 0; cls < total; ++cls) {
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 1000)
                throw std::runtime_error("generate_synthetic: cannot separate class attributes");
            std::vector<double> row(p.attr_dim);
            double norm = 0.0;
            for (double& v : row) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm == 0.0) continue;
            for (double& v : row) v /= norm;

            double min_dist = kMinAttrDist + 1.0;
            for (std::size_t prev = 0; prev < cls; ++prev) {
                double d = 0.0;
                for (std::size_t c = 0; c < p.attr_dim; ++c) {
                    const double diff = row[c] - attrs(prev, c);
                    d += diff * diff;
                }
                min_dist = std::min(min_dist, std::sqrt(d));
            }
            if (min_dist >= kMinAttrDist) {
                std::copy(row.begin(), row.end(), attrs.row(cls).begin());
                break;
            }
        }
    }
    return attrs;
}

double min_pairwise_distance(const Matrix& points, std::size_t from = 0) {
    const Matrix d = kernels::pairwise_sqdist(points, points);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = from; i < points.rows(); ++i)
        for (std::size_t j = i + 1; j < points.rows(); ++j) best = std::min(best, d(i, j));
    return std::sqrt(best);
}

}  // namespace

SynthGroundTruth generate_synthetic(const std::filesystem::path& out_dir, const SynthParams& params) {
    if (params.seen == 0 || params.unseen == 0)
        throw std::invalid_argument("generate_synthetic: need at least one class on each side");
    if (params.per_class == 0) throw std::invalid_argument("generate_synthetic: per_class is zero");
    if (params.test_seen_fraction < 0.0 || params.test_seen_fraction >= 1.0)
        throw std::invalid_argument("generate_synthetic: test_seen_fraction outside [0, 1)");

    const std::size_t total = params.seen + params.unseen;
    const Matrix attrs = draw_attributes(params, params.seed);

    // Ground-truth map, retried until the induced class centers are well
    // separated after scaling the mean pairwise distance to 1. The map's
    // output layer is linear and projected so the class centers come out
    // centered on the origin, which keeps their absolute norms on the same
    // scale as their spread.
    SynthGroundTruth truth;
    Matrix centers;
    constexpr double kMinCenterDist = 0.2;
    constexpr double kMinUnseenDist = 0.45;
    for (std::uint64_t attempt = 0;; ++attempt) {
        if (attempt >= 256)
            throw std::runtime_error("generate_synthetic: cannot separate class centers");
        // The ground-truth map composes to an exact linear transform: with
        // act(t) - act(-t) == (1 + slope) * t, mirrored first-layer columns
        // and negated second-layer rows cancel every kink. A linear map is
        // the friendliest realizable target: a partially trained student's
        // unseen projections extrapolate toward the true positions instead
        // of wandering until its nonlinear capacity develops.
        {
            Rng map_rng(derive_seed(params.seed, "synth-map", attempt));
            const double slope = 0.2;
            Matrix mix(params.attr_dim, params.attr_dim);
            Matrix out(params.attr_dim, params.feature_dim);
            for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = map_rng.normal();
            for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = map_rng.normal();

            // Kill the component along the mean attribute row so the class
            // centers come out centered on the origin.
            std::vector<double> mean_attr(params.attr_dim, 0.0);
            for (std::size_t r = 0; r < attrs.rows(); ++r)
                for (std::size_t c = 0; c < attrs.cols(); ++c) mean_attr[c] += attrs(r, c);
            double norm_sq = 0.0;
            for (double& v : mean_attr) {
                v /= static_cast<double>(attrs.rows());
                norm_sq += v * v;
            }
            if (norm_sq > 0.0) {
                for (std::size_t c = 0; c < mix.cols(); ++c) {
                    double proj = 0.0;
                    for (std::size_t r = 0; r < mix.rows(); ++r) proj += mean_attr[r] * mix(r, c);
                    proj /= norm_sq;
                    for (std::size_t r = 0; r < mix.rows(); ++r) mix(r, c) -= mean_attr[r] * proj;
                }
            }

            truth.map.negative_slope = slope;
            truth.map.final_activation = false;
            truth.map.w1 = Matrix(params.attr_dim, 2 * params.attr_dim);
            truth.map.w2 = Matrix(2 * params.attr_dim, params.feature_dim);
            for (std::size_t r = 0; r < params.attr_dim; ++r)
                for (std::size_t c = 0; c < params.attr_dim; ++c) {
                    truth.map.w1(r, c) = mix(r, c);
                    truth.map.w1(r, params.attr_dim + c) = -mix(r, c);
                }
            for (std::size_t r = 0; r < params.attr_dim; ++r)
                for (std::size_t c = 0; c < params.feature_dim; ++c) {
                    truth.map.w2(r, c) = out(r, c) / (1.0 + slope);
                    truth.map.w2(params.attr_dim + r, c) = -out(r, c) / (1.0 + slope);
                }
        }
        centers = forward(truth.map, attrs);

        const Matrix sq = kernels::pairwise_sqdist(centers, centers);
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < total; ++i)
            for (std::size_t j = i + 1; j < total; ++j) {
                sum += std::sqrt(sq(i, j));
                ++pairs;
            }
        if (pairs == 0 || sum == 0.0) continue;
        const double scale = static_cast<double>(pairs) / sum;
        for (std::size_t r = 0; r < truth.map.w2.rows(); ++r)
            for (std::size_t c = 0; c < truth.map.w2.cols(); ++c) truth.map.w2(r, c) *= scale;
        centers = forward(truth.map, attrs);

        // Unseen classes carry the clustering story, so they get a wider
        // floor; seen classes only need enough room for nearest-center reads.
        const auto separated = [&](const Matrix& m) {
            return min_pairwise_distance(m) >= kMinCenterDist &&
                   min_pairwise_distance(m, params.seen) >= kMinUnseenDist;
        };

        // Shift unseen centers off the map's image by delta. A plain isotropic
        // shift in high dimension is nearly orthogonal to every class axis and
        // leaves nearest-center prediction untouched, so instead close unseen
        // classes are paired up and each pair is translated along its own
        // axis: the trailing class ends up between the two projected centers
        // (the confusion a projection-only method suffers under domain shift)
        // while pair geometry, and with it the cluster structure, survives.
        if (params.delta == 0.0) {
            if (separated(centers)) break;
            continue;
        }
        if (!separated(centers)) continue;  // cramped before any shift; redraw

        Rng shift_rng(derive_seed(params.seed, "synth-shift", attempt));
        const Matrix before = centers;
        const auto dist = [&](std::size_t a, std::size_t b) {
            double sq = 0.0;
            for (std::size_t c = 0; c < params.feature_dim; ++c) {
                const double diff = before(params.seen + a, c) - before(params.seen + b, c);
                sq += diff * diff;
            }
            return sq;
        };

        // Pair unseen classes whose spacing falls inside a window scaled by
        // the shift magnitude. The lower edge keeps the trailing class from
        // landing on top of its partner's predicted position (which would
        // hand any center-matching method a free wrong answer); the upper
        // edge keeps the pair close enough that the trailing class still
        // crosses into its partner's nearest-center cell. Classes without a
        // partner in the window take independent random directions, which in
        // high dimension barely move them relative to anyone else.
        const double pair_lo = std::max(1.6 * params.delta, kMinUnseenDist);
        const double pair_hi = 1.9 * params.delta;
        const std::size_t wanted_pairs =
            pair_lo <= pair_hi ? (params.unseen + 3) / 4 : 0;

        std::vector<std::pair<std::size_t, std::size_t>> class_pairs;
        std::vector<std::size_t> unpaired(params.unseen);
        for (std::size_t u = 0; u < params.unseen; ++u) unpaired[u] = u;
        while (unpaired.size() >= 2) {
            std::size_t bi = 0, bj = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < unpaired.size(); ++i)
                for (std::size_t j = i + 1; j < unpaired.size(); ++j) {
                    const double d = std::sqrt(dist(unpaired[i], unpaired[j]));
                    if (d >= pair_lo && d <= pair_hi && d < best) {
                        best = d;
                        bi = i;
                        bj = j;
                    }
                }
            if (bi == bj) break;  // no pair left inside the window
            class_pairs.emplace_back(unpaired[bi], unpaired[bj]);
            unpaired.erase(unpaired.begin() + static_cast<std::ptrdiff_t>(bj));
            unpaired.erase(unpaired.begin() + static_cast<std::ptrdiff_t>(bi));
        }
        if (class_pairs.size() < wanted_pairs) continue;  // redraw the map

        Matrix lone_dirs(unpaired.size(), params.feature_dim);
        for (std::size_t i = 0; i < unpaired.size(); ++i) {
            auto dir = lone_dirs.row(i);
            double norm = 0.0;
            for (double& v : dir) {
                v = shift_rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm == 0.0) {
                dir[0] = 1.0;
                norm = 1.0;
            }
            for (double& v : dir) v /= norm;
        }

        // The shift confuses per-class nearest-center lookups on purpose, but
        // the optimal one-to-one assignment between predicted positions and
        // shifted centers must remain the identity, with some slack, or the
        // structure constraint has no correct answer to recover. Margin =
        // best non-identity assignment cost minus identity cost.
        const auto matching_margin = [&](const Matrix& m, CostMode mode) {
            const std::size_t n = params.unseen;
            if (n < 2) return std::numeric_limits<double>::infinity();
            Matrix anchors(n, params.feature_dim), shifted(n, params.feature_dim);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < params.feature_dim; ++c) {
                    anchors(i, c) = before(params.seen + i, c);
                    shifted(i, c) = m(params.seen + i, c);
                }
            Matrix cost = cost_matrix(anchors, shifted, mode);
            double identity_cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) identity_cost += cost(i, i);
            const Assignment opt = min_weight_perfect_matching(cost);
            for (std::size_t i = 0; i < n; ++i)
                if (opt.pairs[i] != static_cast<int>(i)) return -1.0;
            double best_alt = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                const double kept = cost(i, i);
                cost(i, i) = identity_cost + 1e9;
                best_alt = std::min(best_alt, min_weight_perfect_matching(cost).total_cost);
                cost(i, i) = kept;
            }
            return best_alt - identity_cost;
        };
        constexpr double kMatchMarginSq = 0.45;
        constexpr double kMatchMarginEu = 0.35;

        // Which member of a pair leads is free; walk the sign configurations
        // until the translated constellation keeps everyone separated.
        const std::uint64_t configs =
            class_pairs.size() >= 6 ? 64 : (std::uint64_t{1} << class_pairs.size());
        bool placed = false;
        for (std::uint64_t mask = 0; mask < configs && !placed; ++mask) {
            Matrix trial = before;
            for (std::size_t p = 0; p < class_pairs.size(); ++p) {
                auto [u, t] = class_pairs[p];
                if (p < 64 && (mask >> p & 1)) std::swap(u, t);
                const double len = std::sqrt(dist(u, t));
                if (len < 1e-12) break;
                for (std::size_t c = 0; c < params.feature_dim; ++c) {
                    const double step = params.delta *
                                        (before(params.seen + t, c) - before(params.seen + u, c)) / len;
                    trial(params.seen + u, c) += step;
                    trial(params.seen + t, c) += step;
                }
            }
            for (std::size_t i = 0; i < unpaired.size(); ++i) {
                const std::size_t u = unpaired[i];
                const auto dir = lone_dirs.row(i);
                for (std::size_t c = 0; c < params.feature_dim; ++c)
                    trial(params.seen + u, c) += params.delta * dir[c];
            }
            if (separated(trial) && matching_margin(trial, CostMode::squared) >= kMatchMarginSq &&
                matching_margin(trial, CostMode::euclidean) >= kMatchMarginEu) {
                centers = std::move(trial);
                placed = true;
            }
        }
        if (placed) break;
    }

    Dataset& data = truth.dataset;
    data.attributes.attributes = attrs;
    for (std::size_t c = 0; c < total; ++c) data.attributes.class_ids.push_back(static_cast<int>(c));
    for (std::size_t c = 0; c < params.seen; ++c) data.split.seen.push_back(static_cast<int>(c));
    for (std::size_t c = 0; c < params.unseen; ++c)
        data.split.unseen.push_back(static_cast<int>(params.seen + c));

    truth.seen_centers.centers = Matrix(params.seen, params.feature_dim);
    truth.seen_centers.class_ids = data.split.seen;
    truth.unseen_centers.centers = Matrix(params.unseen, params.feature_dim);
    truth.unseen_centers.class_ids = data.split.unseen;
    for (std::size_t c = 0; c < params.seen; ++c) {
        const auto src = centers.row(c);
        std::copy(src.begin(), src.end(), truth.seen_centers.centers.row(c).begin());
    }
    for (std::size_t c = 0; c < params.unseen; ++c) {
        const auto src = centers.row(params.seen + c);
        std::copy(src.begin(), src.end(), truth.unseen_centers.centers.row(c).begin());
    }

    Rng inst_rng(derive_seed(params.seed, "synth-inst"));
    const std::size_t test_per_class =
        static_cast<std::size_t>(static_cast<double>(params.per_class) * params.test_seen_fraction + 1e-9);

    data.source.features = Matrix(params.seen * params.per_class, params.feature_dim);
    data.source.labels = std::vector<int>();
    for (std::size_t c = 0; c < params.seen; ++c) {
        for (std::size_t i = 0; i < params.per_class; ++i) {
            const std::size_t r = c * params.per_class + i;
            auto row = data.source.features.row(r);
            const auto center = centers.row(c);
            for (std::size_t f = 0; f < params.feature_dim; ++f)
                row[f] = center[f] + params.sigma * inst_rng.normal();
            data.source.labels->push_back(static_cast<int>(c));
            if (i + test_per_class >= params.per_class) data.split.test_seen_rows.push_back(r);
        }
    }

    data.target.features = Matrix(params.unseen * params.per_class, params.feature_dim);
    data.target.labels = std::vector<int>();
    for (std::size_t c = 0; c < params.unseen; ++c) {
        for (std::size_t i = 0; i < params.per_class; ++i) {
            auto row = data.target.features.row(c * params.per_class + i);
            const auto center = centers.row(params.seen + c);
            for (std::size_t f = 0; f < params.feature_dim; ++f)
                row[f] = center[f] + params.sigma * inst_rng.normal();
            data.target.labels->push_back(static_cast<int>(params.seen + c));
        }
    }

    save_dataset(out_dir, data);
    return truth;
}

}  // namespace vsc
