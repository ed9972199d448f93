#include "flowvote/decision.hpp"

#include "flowvote/kv_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace flowvote {

namespace {

// Gains closer than this are ties; the smaller split point wins a tie.
constexpr double kGainTolerance = 1e-12;

using Counts = std::array<std::size_t, 3>;

double entropy(const Counts& c) {
    const auto n = static_cast<double>(c[0] + c[1] + c[2]);
    if (n == 0.0) return 0.0;
    double h = 0.0;
    for (auto k : c) {
        if (k == 0) continue;
        const double p = static_cast<double>(k) / n;
        h -= p * std::log2(p);
    }
    return h;
}

AnomalyKind majority(const Counts& c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i) {
        if (c[i] > c[best]) best = i;
    }
    return static_cast<AnomalyKind>(best);
}

struct Builder {
    const TreeConfig& cfg;
    std::vector<IntensityTree::Node>& nodes;

    // `data` is sorted by intensity.
    int build(std::span<const LabeledIntensity> data, int depth) {
        Counts counts{};
        for (const auto& d : data) ++counts[static_cast<std::size_t>(d.label)];

        const int id = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes[id].counts = counts;
        nodes[id].label = majority(counts);

        const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
        if (pure || data.size() <= 1 || depth >= cfg.max_depth) return id;

        const double parent = entropy(counts);
        const auto n = static_cast<double>(data.size());
        Counts left{};
        double best_gain = kGainTolerance;
        std::optional<std::size_t> best_cut;
        for (std::size_t i = 0; i + 1 < data.size(); ++i) {
            ++left[static_cast<std::size_t>(data[i].label)];
            if (data[i].intensity == data[i + 1].intensity) continue;
            Counts right{counts[0] - left[0], counts[1] - left[1], counts[2] - left[2]};
            const auto nl = static_cast<double>(i + 1);
            const double gain = parent - (nl / n) * entropy(left) - ((n - nl) / n) * entropy(right);
            if (gain > best_gain + (best_cut ? kGainTolerance : 0.0)) {
                best_gain = gain;
                best_cut = i + 1;
            }
        }
        if (!best_cut) return id;

        const std::size_t cut = *best_cut;
        const double split = 0.5 * (data[cut - 1].intensity + data[cut].intensity);
        const int l = build(data.first(cut), depth + 1);
        const int r = build(data.subspan(cut), depth + 1);
        nodes[id].leaf = false;
        nodes[id].split = split;
        nodes[id].left = l;
        nodes[id].right = r;
        return id;
    }
};

}  // namespace

IntensityTree IntensityTree::fit(std::span<const LabeledIntensity> data, const TreeConfig& cfg) {
    if (data.empty()) throw Error("cannot fit a tree on no instances");
    for (const auto& d : data) {
        if (!(d.intensity >= 1.0) || !std::isfinite(d.intensity)) throw Error("intensities must be finite and >= 1");
    }
    std::vector<LabeledIntensity> sorted(data.begin(), data.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.intensity < b.intensity; });
    IntensityTree tree;
    Builder{cfg, tree.nodes_}.build(sorted, 0);
    return tree;
}

std::vector<IntensityTree::Rule> IntensityTree::rules() const {
    std::vector<Rule> out;
    struct Frame {
        int node;
        Rule rule;
    };
    std::vector<Frame> stack{{0, {}}};
    while (!stack.empty()) {
        auto [id, rule] = stack.back();
        stack.pop_back();
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        if (n.leaf) {
            rule.label = n.label;
            out.push_back(rule);
            continue;
        }
        Rule right = rule;
        right.lower = n.split;
        Rule left = rule;
        left.upper = n.split;
        stack.push_back({n.right, right});
        stack.push_back({n.left, left});
    }
    return out;
}

AnomalyKind IntensityTree::predict(double intensity) const {
    int id = 0;
    while (!nodes_[static_cast<std::size_t>(id)].leaf) {
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        id = intensity <= n.split ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(id)].label;
}

int IntensityTree::depth() const {
    int deepest = 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.leaf) {
            stack.push_back({n.left, d + 1});
            stack.push_back({n.right, d + 1});
        }
    }
    return deepest;
}

ClassBounds extract_class_bounds(std::span<const IntensityTree::Rule> rules, std::span<const LabeledIntensity> data) {
    ClassBounds bounds;
    for (const auto& r : rules) {
        if (!r.lower) continue;
        auto& b = bounds[static_cast<std::size_t>(r.label)];
        b = b ? std::min(*b, *r.lower) : *r.lower;
    }
    for (auto kind : kAllKinds) {
        auto& b = bounds[static_cast<std::size_t>(kind)];
        if (b) continue;
        for (const auto& d : data) {
            if (d.label == kind) b = b ? std::min(*b, d.intensity) : d.intensity;
        }
    }
    return bounds;
}

ClassBounds learn_class_bounds(std::span<const LabeledIntensity> data, const TreeConfig& cfg) {
    const auto tree = IntensityTree::fit(data, cfg);
    return extract_class_bounds(tree.rules(), data);
}

Thresholds learn_thresholds(std::span<const LabeledIntensity> data, const TreeConfig& cfg) {
    for (auto kind : kAllKinds) {
        if (std::none_of(data.begin(), data.end(), [kind](const auto& d) { return d.label == kind; })) {
            throw Error("labeled history has no " + std::string(to_string(kind)) + " instance");
        }
    }
    const auto bounds = learn_class_bounds(data, cfg);
    Thresholds th;
    th.ddos = *bounds[0];
    th.dos = *bounds[1];
    th.scan = *bounds[2];
    th.bootstrap = false;
    th.validate();
    return th;
}

std::vector<LabeledIntensity> read_labeled_history(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::vector<LabeledIntensity> out;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != "intensity,label") {
                throw ParseError(path.string() + ": expected header 'intensity,label'");
            }
            header = true;
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": expected intensity,label");
        }
        const double intensity = parse_double(std::string_view(line).substr(0, comma), "intensity");
        auto label = parse_anomaly_kind(std::string_view(line).substr(comma + 1));
        if (!label) throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": unknown label");
        if (!(intensity >= 1.0)) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": intensity must be >= 1");
        }
        out.push_back({intensity, *label});
    }
    if (!header) throw ParseError(path.string() + ": missing header");
    return out;
}

void write_labeled_history(const std::filesystem::path& path, std::span<const LabeledIntensity> data) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "intensity,label\n";
    out << std::setprecision(17);
    for (const auto& d : data) out << d.intensity << ',' << to_string(d.label) << '\n';
}

std::string format_thresholds(const Thresholds& th) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "theta_ddos = " << th.ddos << '\n';
    out << "theta_dos = " << th.dos << '\n';
    out << "theta_scan = " << th.scan << '\n';
    out << "bootstrap = " << (th.bootstrap ? "true" : "false") << '\n';
    return out.str();
}

Thresholds read_thresholds(const std::filesystem::path& path) {
    const auto kv = KvConfig::load(path);
    Thresholds th;
    auto need = [&](std::string_view key) {
        auto v = kv.get(key);
        if (!v) throw ParseError(path.string() + ": missing '" + std::string(key) + "'");
        return parse_double(*v, key);
    };
    th.ddos = need("theta_ddos");
    th.dos = need("theta_dos");
    th.scan = need("theta_scan");
    th.bootstrap = kv.get("bootstrap").value_or("false") == "true";
    th.validate();
    return th;
}

void write_thresholds(const std::filesystem::path& path, const Thresholds& th, std::span<const std::string> comments) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    for (const auto& c : comments) out << "# " << c << '\n';
    out << format_thresholds(th);
    if (!out) throw Error("write failure on '" + path.string() + "'");
}

}  // namespace flowvote
