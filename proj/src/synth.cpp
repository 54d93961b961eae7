#include "epicohort/synth.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <deque>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "epicohort/classification.hpp"
#include "epicohort/reference_tables.hpp"
#include "epicohort/rng.hpp"

namespace epicohort {

namespace {

constexpr std::array<std::string_view, kPlantDimCount> kDimNames = {
    "indigenous_speaker", "test_status", "sex", "care_status", "icu_status", "intubation_status", "vital_status", "state",
};

template <class E>
int ord(E e) {
    return static_cast<int>(e);
}

std::size_t idx(PlantDim d) { return static_cast<std::size_t>(d); }

std::string describe_values(const std::vector<PlantDim>& dims, const std::vector<int>& values) {
    std::string out = "(";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) out += ", ";
        out += dim_name(dims[i]);
        out += '=';
        out += std::to_string(values[i]);
    }
    return out + ")";
}

}  // namespace

std::string_view dim_name(PlantDim d) { return kDimNames[idx(d)]; }

std::optional<PlantDim> parse_dim(std::string_view name) {
    for (std::size_t i = 0; i < kDimNames.size(); ++i)
        if (kDimNames[i] == name) return static_cast<PlantDim>(i);
    return std::nullopt;
}

int parse_dim_value(PlantDim d, std::string_view label) {
    std::optional<int> v;
    switch (d) {
        case PlantDim::IndigenousSpeaker:
            if (auto t = parse_tristate(label)) v = ord(*t);
            break;
        case PlantDim::TestStatus:
            if (auto t = parse_test_status(label)) v = ord(*t);
            break;
        case PlantDim::Sex:
            if (auto t = parse_sex(label)) v = ord(*t);
            break;
        case PlantDim::CareStatus:
            if (auto t = parse_care_type(label)) v = ord(*t);
            break;
        case PlantDim::IcuStatus:
            if (auto t = parse_icu_status(label)) v = ord(*t);
            break;
        case PlantDim::IntubationStatus:
            if (auto t = parse_intubation_status(label)) v = ord(*t);
            break;
        case PlantDim::VitalStatus:
            if (auto t = parse_vital_status(label)) v = ord(*t);
            break;
        case PlantDim::State: {
            int code = 0;
            auto [p, ec] = std::from_chars(label.data(), label.data() + label.size(), code);
            if (ec == std::errc() && p == label.data() + label.size() && code >= 1 && code <= kStateCount) v = code;
            break;
        }
    }
    if (!v) throw InconsistentSpec("invalid value '" + std::string(label) + "' for " + std::string(dim_name(d)));
    return *v;
}

std::uint64_t GeneratorSpec::total_faults() const {
    std::uint64_t n = 0;
    for (auto f : faults) n += f;
    return n;
}

// ---------------------------------------------------------------------------
// YAML

namespace {

Marginal marginal_from_yaml(const YAML::Node& node) {
    Marginal m;
    if (!node["dims"] || !node["dims"].IsSequence()) throw InconsistentSpec("marginal needs a 'dims' list");
    for (const auto& d : node["dims"]) {
        auto dim = parse_dim(d.as<std::string>());
        if (!dim) throw InconsistentSpec("unknown plant dimension: " + d.as<std::string>());
        if (std::find(m.dims.begin(), m.dims.end(), *dim) != m.dims.end())
            throw InconsistentSpec("dimension listed twice: " + d.as<std::string>());
        m.dims.push_back(*dim);
    }
    if (!node["cells"] || !node["cells"].IsSequence()) throw InconsistentSpec("marginal needs a 'cells' list");
    for (const auto& c : node["cells"]) {
        if (!c.IsSequence() || c.size() != m.dims.size() + 1)
            throw InconsistentSpec("each cell lists one value per dimension followed by a count");
        MarginalCell cell;
        for (std::size_t i = 0; i < m.dims.size(); ++i)
            cell.values.push_back(parse_dim_value(m.dims[i], c[i].as<std::string>()));
        cell.count = c[m.dims.size()].as<std::uint64_t>();
        m.cells.push_back(std::move(cell));
    }
    return m;
}

}  // namespace

GeneratorSpec GeneratorSpec::from_yaml(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw InconsistentSpec(std::string("generator spec is not valid YAML: ") + e.what());
    }
    GeneratorSpec spec;
    try {
        if (root["seed"]) spec.seed = root["seed"].as<std::uint64_t>();
        if (!root["rows"]) throw InconsistentSpec("generator spec needs 'rows'");
        spec.rows = root["rows"].as<std::uint64_t>();
        if (root["deceased_per_mille"]) spec.deceased_per_mille = root["deceased_per_mille"].as<std::uint32_t>();
        if (spec.deceased_per_mille > 1000) throw InconsistentSpec("deceased_per_mille above 1000");
        if (auto dist = root["distributions"]) {
            for (const auto& kv : dist) {
                auto field = parse_field(kv.first.as<std::string>());
                if (!field) throw InconsistentSpec("unknown field in distributions: " + kv.first.as<std::string>());
                auto& weights = spec.distributions[*field];
                for (const auto& w : kv.second) weights.emplace_back(w.first.as<std::string>(), w.second.as<std::uint64_t>());
            }
        }
        if (auto planted = root["planted"]) {
            for (const auto& step : planted) {
                PlantStep s;
                s.primary = marginal_from_yaml(step);
                if (step["joint"]) s.joint = marginal_from_yaml(step["joint"]);
                spec.planted.push_back(std::move(s));
            }
        }
        if (auto faults = root["faults"]) {
            for (const auto& kv : faults) {
                auto kind = parse_row_error_kind(kv.first.as<std::string>());
                if (!kind) throw InconsistentSpec("unknown fault kind: " + kv.first.as<std::string>());
                spec.faults[static_cast<std::size_t>(*kind)] = kv.second.as<std::uint64_t>();
            }
        }
    } catch (const YAML::Exception& e) {
        throw InconsistentSpec(std::string("generator spec: ") + e.what());
    }
    solve_strata(spec);
    return spec;
}

GeneratorSpec GeneratorSpec::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InconsistentSpec("cannot open generator spec: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_yaml(ss.str());
}

// ---------------------------------------------------------------------------
// Strata

namespace {

void check_gating(const Stratum& s) {
    auto care = s.get(PlantDim::CareStatus);
    auto icu = s.get(PlantDim::IcuStatus);
    auto intub = s.get(PlantDim::IntubationStatus);
    const int hosp = ord(CareStatus::Hospitalized);
    if (icu) {
        bool na = *icu == ord(IcuStatus::NotApplicable);
        if (!care || (na == (*care == hosp)))
            throw InconsistentSpec("ICU status " + std::string(to_string(static_cast<IcuStatus>(*icu))) +
                                   " requires a planted care status that " + (na ? "is not" : "is") + " Hospitalized");
    }
    if (intub) {
        bool na = *intub == ord(IntubationStatus::NotApplicable);
        if (!icu || (na == (*icu == ord(IcuStatus::InICU))))
            throw InconsistentSpec("intubation status " +
                                   std::string(to_string(static_cast<IntubationStatus>(*intub))) +
                                   " requires a planted ICU status that " + (na ? "is not" : "is") + " InICU");
    }
}

// Emits pieces of `selected` strata (in order) against `demands` (in order).
void northwest(const std::vector<Stratum>& selected, const std::vector<std::pair<Assignment, std::uint64_t>>& demands,
               std::vector<Stratum>& out) {
    std::size_t d = 0;
    std::uint64_t left = demands.empty() ? 0 : demands[0].second;
    for (const auto& s : selected) {
        std::uint64_t supply = s.count;
        while (supply > 0) {
            while (left == 0) left = demands[++d].second;
            auto take = std::min(supply, left);
            Stratum piece = s;
            piece.count = take;
            for (std::size_t i = 0; i < kPlantDimCount; ++i)
                if (demands[d].first[i]) piece.values[i] = demands[d].first[i];
            out.push_back(piece);
            supply -= take;
            left -= take;
        }
    }
}

std::vector<int> values_of(const Stratum& s, const std::vector<PlantDim>& dims) {
    std::vector<int> out;
    for (auto d : dims) out.push_back(*s.get(d));
    return out;
}

// Edmonds-Karp on a small dense-ish graph.
class FlowNetwork {
public:
    explicit FlowNetwork(std::size_t n) : adj_(n) {}

    std::size_t add_edge(std::size_t u, std::size_t v, std::uint64_t cap) {
        edges_.push_back({v, cap});
        adj_[u].push_back(edges_.size() - 1);
        edges_.push_back({u, 0});
        adj_[v].push_back(edges_.size() - 1);
        return edges_.size() - 2;
    }

    std::uint64_t flow_on(std::size_t e) const { return edges_[e ^ 1].cap; }

    std::uint64_t max_flow(std::size_t s, std::size_t t) {
        std::uint64_t total = 0;
        for (;;) {
            std::vector<std::size_t> via(adj_.size(), std::numeric_limits<std::size_t>::max());
            std::deque<std::size_t> queue{s};
            std::vector<bool> seen(adj_.size(), false);
            seen[s] = true;
            while (!queue.empty() && !seen[t]) {
                auto u = queue.front();
                queue.pop_front();
                for (auto e : adj_[u]) {
                    auto v = edges_[e].to;
                    if (!seen[v] && edges_[e].cap > 0) {
                        seen[v] = true;
                        via[v] = e;
                        queue.push_back(v);
                    }
                }
            }
            if (!seen[t]) return total;
            std::uint64_t push = std::numeric_limits<std::uint64_t>::max();
            for (auto v = t; v != s; v = edges_[via[v] ^ 1].to) push = std::min(push, edges_[via[v]].cap);
            for (auto v = t; v != s; v = edges_[via[v] ^ 1].to) {
                edges_[via[v]].cap -= push;
                edges_[via[v] ^ 1].cap += push;
            }
            total += push;
        }
    }

private:
    struct Edge {
        std::size_t to;
        std::uint64_t cap;
    };
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<Edge> edges_;
};

struct StepLayout {
    std::vector<PlantDim> group_dims, new_dims;
    std::vector<std::size_t> group_pos, new_pos;  // positions within marginal dims
};

StepLayout layout_for(const Marginal& m, const std::vector<Stratum>& strata) {
    if (m.dims.empty()) throw InconsistentSpec("marginal without dimensions");
    StepLayout l;
    for (std::size_t i = 0; i < m.dims.size(); ++i) {
        bool present = std::any_of(strata.begin(), strata.end(), [&](const Stratum& s) { return s.get(m.dims[i]).has_value(); });
        if (present) {
            l.group_dims.push_back(m.dims[i]);
            l.group_pos.push_back(i);
        } else {
            l.new_dims.push_back(m.dims[i]);
            l.new_pos.push_back(i);
        }
    }
    return l;
}

std::vector<int> pick(const std::vector<int>& values, const std::vector<std::size_t>& pos) {
    std::vector<int> out;
    for (auto p : pos) out.push_back(values[p]);
    return out;
}

Assignment assignment_for(const std::vector<PlantDim>& dims, const std::vector<int>& values) {
    Assignment a{};
    for (std::size_t i = 0; i < dims.size(); ++i) a[idx(dims[i])] = values[i];
    return a;
}

bool matches(const Stratum& s, const std::vector<PlantDim>& dims, const std::vector<int>& values) {
    for (std::size_t i = 0; i < dims.size(); ++i)
        if (s.get(dims[i]) != values[i]) return false;
    return true;
}

// Group-key -> ordered (new tuple, count) demands, in first-appearance order.
using Demands = std::vector<std::pair<std::vector<int>, std::vector<std::pair<std::vector<int>, std::uint64_t>>>>;

Demands demands_for(const Marginal& m, const StepLayout& l) {
    Demands out;
    for (const auto& cell : m.cells) {
        auto g = pick(cell.values, l.group_pos);
        auto v = pick(cell.values, l.new_pos);
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == g; });
        if (it == out.end()) {
            out.emplace_back(g, std::vector<std::pair<std::vector<int>, std::uint64_t>>{});
            it = out.end() - 1;
        }
        for (const auto& [tuple, n] : it->second)
            if (tuple == v) throw InconsistentSpec("cell listed twice: " + describe_values(m.dims, cell.values));
        it->second.emplace_back(v, cell.count);
    }
    return out;
}

std::vector<Stratum> apply_step(const std::vector<Stratum>& strata, const PlantStep& step) {
    const auto& P = step.primary;
    auto l = layout_for(P, strata);
    if (l.new_dims.empty()) throw InconsistentSpec("marginal introduces no new dimension");
    auto demands = demands_for(P, l);

    std::vector<bool> used(strata.size(), false);
    std::vector<std::vector<std::size_t>> members(demands.size());
    for (std::size_t g = 0; g < demands.size(); ++g) {
        std::uint64_t supply = 0, wanted = 0;
        for (std::size_t i = 0; i < strata.size(); ++i) {
            const auto& s = strata[i];
            if (std::any_of(l.group_dims.begin(), l.group_dims.end(), [&](PlantDim d) { return !s.get(d); })) continue;
            if (!matches(s, l.group_dims, demands[g].first)) continue;
            members[g].push_back(i);
            used[i] = true;
            supply += s.count;
        }
        for (const auto& [tuple, n] : demands[g].second) wanted += n;
        if (supply != wanted)
            throw InconsistentSpec("marginal over " + describe_values(l.group_dims, demands[g].first) + ": strata hold " +
                                   std::to_string(supply) + " rows but the cells ask for " + std::to_string(wanted));
    }

    std::vector<Stratum> out;
    for (std::size_t i = 0; i < strata.size(); ++i)
        if (!used[i]) out.push_back(strata[i]);

    if (!step.joint) {
        for (std::size_t g = 0; g < demands.size(); ++g) {
            std::vector<Stratum> sel;
            for (auto i : members[g]) sel.push_back(strata[i]);
            std::vector<std::pair<Assignment, std::uint64_t>> d;
            for (const auto& [tuple, n] : demands[g].second) d.emplace_back(assignment_for(l.new_dims, tuple), n);
            northwest(sel, d, out);
        }
        return out;
    }

    // Joint: the new dimension must be binary and is constrained over two
    // different group keys at once. Solved as a bipartite transportation flow.
    const auto& J = *step.joint;
    StepLayout lj;
    for (std::size_t i = 0; i < J.dims.size(); ++i) {
        auto it = std::find(l.new_dims.begin(), l.new_dims.end(), J.dims[i]);
        if (it != l.new_dims.end()) {
            lj.new_pos.push_back(i);
            lj.new_dims.push_back(J.dims[i]);
        } else {
            lj.group_pos.push_back(i);
            lj.group_dims.push_back(J.dims[i]);
        }
    }
    if (lj.new_dims.size() != l.new_dims.size()) throw InconsistentSpec("joint marginal must cover the same new dimensions");
    // Align new-dim order to the primary's.
    std::vector<std::size_t> reorder;
    for (auto d : l.new_dims)
        reorder.push_back(lj.new_pos[std::find(lj.new_dims.begin(), lj.new_dims.end(), d) - lj.new_dims.begin()]);
    lj.new_pos = reorder;
    lj.new_dims = l.new_dims;
    auto jdemands = demands_for(J, lj);

    std::vector<std::vector<int>> tuples;
    auto note = [&](const std::vector<int>& t) {
        if (std::find(tuples.begin(), tuples.end(), t) == tuples.end()) tuples.push_back(t);
    };
    for (const auto& g : demands)
        for (const auto& [t, n] : g.second) note(t);
    for (const auto& g : jdemands)
        for (const auto& [t, n] : g.second) note(t);
    if (tuples.size() != 2) throw InconsistentSpec("joint marginals need a new dimension with exactly two values");
    const auto& v1 = tuples[0];
    auto amount = [&](const std::vector<std::pair<std::vector<int>, std::uint64_t>>& cells, const std::vector<int>& t) {
        for (const auto& [tt, n] : cells)
            if (tt == t) return n;
        return std::uint64_t{0};
    };

    // Joint group of every member stratum.
    std::vector<std::size_t> stratum_ids;
    std::vector<std::size_t> jgroup_of;
    std::vector<std::uint64_t> jsupply(jdemands.size(), 0);
    for (const auto& m : members)
        for (auto i : m) {
            const auto& s = strata[i];
            if (std::any_of(lj.group_dims.begin(), lj.group_dims.end(), [&](PlantDim d) { return !s.get(d); }))
                throw InconsistentSpec("joint marginal groups on a dimension that is not planted for every row");
            auto key = values_of(s, lj.group_dims);
            auto it = std::find_if(jdemands.begin(), jdemands.end(), [&](const auto& p) { return p.first == key; });
            if (it == jdemands.end())
                throw InconsistentSpec("joint marginal has no cells for " + describe_values(lj.group_dims, key));
            stratum_ids.push_back(i);
            jgroup_of.push_back(static_cast<std::size_t>(it - jdemands.begin()));
            jsupply[jgroup_of.back()] += s.count;
        }
    for (std::size_t h = 0; h < jdemands.size(); ++h) {
        std::uint64_t wanted = 0;
        for (const auto& [t, n] : jdemands[h].second) wanted += n;
        if (wanted != jsupply[h])
            throw InconsistentSpec("joint marginal over " + describe_values(lj.group_dims, jdemands[h].first) +
                                   ": strata hold " + std::to_string(jsupply[h]) + " rows but the cells ask for " +
                                   std::to_string(wanted));
    }

    const std::size_t G = demands.size(), H = jdemands.size();
    const std::size_t source = 0, sink = G + H + 1;
    FlowNetwork net(G + H + 2);
    std::uint64_t need = 0, jneed = 0;
    for (std::size_t g = 0; g < G; ++g) {
        auto c = amount(demands[g].second, v1);
        need += c;
        net.add_edge(source, 1 + g, c);
    }
    for (std::size_t h = 0; h < H; ++h) {
        auto c = amount(jdemands[h].second, v1);
        jneed += c;
        net.add_edge(1 + G + h, sink, c);
    }
    if (need != jneed) throw InconsistentSpec("primary and joint marginals disagree on the total of the new dimension");
    std::vector<std::size_t> edge_of(stratum_ids.size());
    {
        std::size_t k = 0;
        for (std::size_t g = 0; g < G; ++g)
            for (auto i : members[g]) {
                edge_of[k] = net.add_edge(1 + g, 1 + G + jgroup_of[k], strata[i].count);
                ++k;
            }
    }
    if (net.max_flow(source, sink) != need)
        throw InconsistentSpec("primary and joint marginals cannot be realized together");
    const auto& v2 = tuples[1];
    for (std::size_t k = 0; k < stratum_ids.size(); ++k) {
        const auto& s = strata[stratum_ids[k]];
        auto x = net.flow_on(edge_of[k]);
        for (const auto& [t, n] : {std::pair{v1, x}, std::pair{v2, s.count - x}}) {
            if (n == 0) continue;
            Stratum piece = s;
            piece.count = n;
            for (std::size_t i = 0; i < l.new_dims.size(); ++i) piece.set(l.new_dims[i], t[i]);
            out.push_back(piece);
        }
    }
    return out;
}

}  // namespace

void split_northwest(std::vector<Stratum>& strata, const std::function<bool(const Stratum&)>& in_group, PlantDim dim,
                     const std::vector<std::pair<int, std::uint64_t>>& demands) {
    std::vector<Stratum> selected, out;
    std::uint64_t supply = 0, wanted = 0;
    for (const auto& s : strata) {
        if (in_group(s)) {
            if (s.get(dim)) throw InconsistentSpec(std::string(dim_name(dim)) + " is already planted in this group");
            selected.push_back(s);
            supply += s.count;
        } else {
            out.push_back(s);
        }
    }
    std::vector<std::pair<Assignment, std::uint64_t>> d;
    for (const auto& [v, n] : demands) {
        Assignment a{};
        a[idx(dim)] = v;
        d.emplace_back(a, n);
        wanted += n;
    }
    if (supply != wanted)
        throw InconsistentSpec("split over " + std::string(dim_name(dim)) + ": group holds " + std::to_string(supply) +
                               " rows but demands total " + std::to_string(wanted));
    northwest(selected, d, out);
    strata = std::move(out);
}

std::vector<Stratum> solve_strata(const GeneratorSpec& spec) {
    std::vector<Stratum> strata;
    if (!spec.strata.empty()) {
        if (!spec.planted.empty()) throw InconsistentSpec("explicit strata and planted marginals are exclusive");
        std::uint64_t total = 0;
        for (const auto& s : spec.strata) {
            total += s.count;
            if (s.count) strata.push_back(s);
        }
        if (total != spec.rows)
            throw InconsistentSpec("strata hold " + std::to_string(total) + " rows but the spec asks for " +
                                   std::to_string(spec.rows));
    } else {
        strata.push_back(Stratum{{}, spec.rows});
        for (const auto& step : spec.planted) strata = apply_step(strata, step);
    }
    std::erase_if(strata, [](const Stratum& s) { return s.count == 0; });
    for (const auto& s : strata) check_gating(s);
    if (spec.total_faults() > spec.rows)
        throw InconsistentSpec("more faults requested than rows");
    return strata;
}

// ---------------------------------------------------------------------------
// Row production

namespace {

template <class M>
std::string code_for(const CodeTable<M>& table, M meaning, Rng& rng, std::string_view what) {
    auto codes = table.codes_for(meaning);
    if (!codes.empty()) return codes[rng.below(codes.size())];
    if (table.fallback() == meaning) {
        for (std::string candidate : {"99", "999", "9999", "X"}) {
            bool taken = false;
            for (const auto& [k, v] : table.entries()) taken = taken || k == candidate;
            if (!taken) return candidate;
        }
    }
    throw InconsistentSpec("schema has no code for " + std::string(what));
}

template <class M>
M draw(Rng& rng, std::initializer_list<std::pair<M, std::uint64_t>> weights) {
    std::vector<std::uint64_t> w;
    for (const auto& p : weights) w.push_back(p.second);
    return (weights.begin() + rng.weighted(w))->first;
}

TriState draw_tristate(Rng& rng, std::uint64_t yes, std::uint64_t no, std::uint64_t unspec) {
    return draw<TriState>(rng, {{TriState::Yes, yes}, {TriState::No, no}, {TriState::Unspecified, unspec}});
}

std::string format_with(const CalendarDate& d, std::string_view pattern) {
    auto pad = [](unsigned v, int width) {
        auto s = std::to_string(v);
        while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
        return s;
    };
    std::string out;
    for (std::size_t i = 0; i < pattern.size();) {
        if (pattern.substr(i, 4) == "YYYY") {
            out += pad(static_cast<unsigned>(static_cast<int>(d.year())), 4);
            i += 4;
        } else if (pattern.substr(i, 2) == "MM") {
            out += pad(static_cast<unsigned>(d.month()), 2);
            i += 2;
        } else if (pattern.substr(i, 2) == "DD") {
            out += pad(static_cast<unsigned>(d.day()), 2);
            i += 2;
        } else {
            out += pattern[i++];
        }
    }
    return out;
}

void append_csv(std::string& line, std::string_view cell) {
    if (cell.find_first_of(",\"\r\n") == std::string_view::npos) {
        line += cell;
        return;
    }
    line += '"';
    for (char c : cell) {
        if (c == '"') line += '"';
        line += c;
    }
    line += '"';
}

class RowMaker {
public:
    RowMaker(const GeneratorSpec& spec, const SchemaConfig& schema) : spec_(spec), schema_(schema) {
        for (std::size_t f = 0; f < kFieldCount; ++f)
            if (schema.present(static_cast<Field>(f))) fields_.push_back(static_cast<Field>(f));
        std::set<std::string> lab(schema.positive_codes.begin(), schema.positive_codes.end());
        lab.insert(schema.negative_codes.begin(), schema.negative_codes.end());
        pending_ = schema.pending_codes;
        if (pending_.empty())
            for (std::string c : {"3", "9", "99", "999", "X"})
                if (!lab.count(c)) {
                    pending_.push_back(c);
                    break;
                }
        if (schema.positive_codes.empty() || schema.negative_codes.empty())
            throw InconsistentSpec("schema needs positive and negative result codes");
    }

    const std::vector<Field>& fields() const { return fields_; }

    std::vector<std::string> make(Rng& rng, const Stratum& s, std::uint64_t row_index) {
        std::array<std::string, kFieldCount> cell;
        auto set = [&](Field f, std::string v) { cell[static_cast<std::size_t>(f)] = std::move(v); };
        auto overridden = [&](Field f) -> std::optional<std::string> {
            auto it = spec_.distributions.find(f);
            if (it == spec_.distributions.end() || it->second.empty()) return std::nullopt;
            std::vector<std::uint64_t> w;
            for (const auto& p : it->second) w.push_back(p.second);
            return it->second[rng.weighted(w)].first;
        };
        auto tristate = [&](Field f, TriState t) {
            return code_for(schema_.tristate_catalog(f), t, rng, std::string(field_name(f)) + "=" + std::string(to_string(t)));
        };
        auto random_tristate = [&](Field f, std::uint64_t yes, std::uint64_t no, std::uint64_t unspec) {
            if (auto o = overridden(f)) return *o;
            return tristate(f, draw_tristate(rng, yes, no, unspec));
        };

        std::ostringstream id;
        id << std::hex << row_index;
        set(Field::RecordId, id.str());

        if (auto v = s.get(PlantDim::Sex))
            set(Field::Sex, code_for(schema_.sex_catalog, static_cast<Sex>(*v), rng, "sex"));
        else if (auto o = overridden(Field::Sex))
            set(Field::Sex, *o);
        else
            set(Field::Sex, code_for(schema_.sex_catalog,
                                     draw<Sex>(rng, {{Sex::Female, 49}, {Sex::Male, 49}, {Sex::Unspecified, 2}}), rng, "sex"));

        if (auto o = overridden(Field::Age))
            set(Field::Age, *o);
        else
            set(Field::Age, std::to_string(rng.between(0, 100)));

        int reporting = 0;
        if (auto v = s.get(PlantDim::State))
            reporting = *v;
        else
            reporting = static_cast<int>(rng.between(1, kStateCount));
        set(Field::ReportingState, std::to_string(reporting));
        if (auto o = overridden(Field::ResidenceState))
            set(Field::ResidenceState, *o);
        else
            set(Field::ResidenceState,
                std::to_string(rng.chance(9, 10) ? reporting : static_cast<int>(rng.between(1, kStateCount))));
        if (auto o = overridden(Field::ResidenceMunicipality))
            set(Field::ResidenceMunicipality, *o);
        else if (!schema_.municipality_unspecified_codes.empty() && rng.chance(1, 20))
            set(Field::ResidenceMunicipality, schema_.municipality_unspecified_codes.front());
        else
            set(Field::ResidenceMunicipality, std::to_string(rng.between(1, 60)));

        std::optional<CareType> care;
        if (auto v = s.get(PlantDim::CareStatus)) {
            set(Field::PatientType, code_for(schema_.patient_type_catalog, static_cast<CareType>(*v), rng, "patient type"));
        } else if (auto o = overridden(Field::PatientType)) {
            set(Field::PatientType, *o);
        } else {
            set(Field::PatientType,
                code_for(schema_.patient_type_catalog,
                         draw<CareType>(rng, {{CareType::Ambulatory, 64},
                                              {CareType::Hospitalized, 34},
                                              {CareType::Unspecified, 2}}),
                         rng, "patient type"));
        }

        auto icu = s.get(PlantDim::IcuStatus);
        if (icu && *icu != ord(IcuStatus::NotApplicable)) {
            TriState t = *icu == ord(IcuStatus::InICU)      ? TriState::Yes
                         : *icu == ord(IcuStatus::NotInICU) ? TriState::No
                                                            : TriState::Unspecified;
            set(Field::Icu, tristate(Field::Icu, t));
        } else {
            set(Field::Icu, random_tristate(Field::Icu, 12, 78, 10));
        }
        auto intub = s.get(PlantDim::IntubationStatus);
        if (intub && *intub != ord(IntubationStatus::NotApplicable)) {
            TriState t = *intub == ord(IntubationStatus::Intubated)      ? TriState::Yes
                         : *intub == ord(IntubationStatus::NotIntubated) ? TriState::No
                                                                         : TriState::Unspecified;
            set(Field::Intubated, tristate(Field::Intubated, t));
        } else {
            set(Field::Intubated, random_tristate(Field::Intubated, 10, 80, 10));
        }

        if (auto v = s.get(PlantDim::TestStatus)) {
            const auto& codes = *v == ord(TestStatus::Positive)   ? schema_.positive_codes
                                : *v == ord(TestStatus::Negative) ? schema_.negative_codes
                                                                  : pending_;
            set(Field::LabResult, codes[rng.below(codes.size())]);
        } else if (auto o = overridden(Field::LabResult)) {
            set(Field::LabResult, *o);
        } else {
            auto t = draw<TestStatus>(rng, {{TestStatus::Positive, 45}, {TestStatus::Negative, 45}, {TestStatus::Pending, 10}});
            const auto& codes = t == TestStatus::Positive   ? schema_.positive_codes
                                : t == TestStatus::Negative ? schema_.negative_codes
                                                            : pending_;
            set(Field::LabResult, codes[rng.below(codes.size())]);
        }

        using namespace std::chrono;
        auto onset = sys_days{year{2020} / March / 1} + days{rng.below(150)};
        set(Field::SymptomOnsetDate, format_with(year_month_day{onset}, schema_.date_format));
        bool dead = false;
        if (auto v = s.get(PlantDim::VitalStatus))
            dead = *v == ord(VitalStatus::Deceased);
        else
            dead = rng.chance(spec_.deceased_per_mille, 1000);
        auto death = onset + days{1 + rng.below(30)};
        set(Field::DeathDate, dead ? format_with(year_month_day{death}, schema_.date_format) : schema_.date_sentinel);

        if (auto v = s.get(PlantDim::IndigenousSpeaker))
            set(Field::IndigenousSpeaker, tristate(Field::IndigenousSpeaker, static_cast<TriState>(*v)));
        else
            set(Field::IndigenousSpeaker, random_tristate(Field::IndigenousSpeaker, 15, 80, 5));
        set(Field::Contact, random_tristate(Field::Contact, 30, 60, 10));
        set(Field::TravelHistory, random_tristate(Field::TravelHistory, 5, 90, 5));
        for (std::size_t c = 0; c < kComorbidityCount; ++c) {
            auto f = comorbidity_field(static_cast<Comorbidity>(c));
            set(f, random_tristate(f, 15, 83, 2));
        }

        std::vector<std::string> out;
        out.reserve(fields_.size());
        for (auto f : fields_) out.push_back(std::move(cell[static_cast<std::size_t>(f)]));
        return out;
    }

    void corrupt(std::vector<std::string>& cells, RowErrorKind kind) const {
        auto pos = [&](Field f) -> std::optional<std::size_t> {
            auto it = std::find(fields_.begin(), fields_.end(), f);
            if (it == fields_.end()) return std::nullopt;
            return static_cast<std::size_t>(it - fields_.begin());
        };
        switch (kind) {
            case RowErrorKind::MalformedDate: cells[*pos(Field::DeathDate)] = "2020-13-40"; break;
            case RowErrorKind::MalformedInteger:
                if (auto p = pos(Field::Age))
                    cells[*p] = "-3";
                else
                    cells[*pos(Field::ReportingState)] = "77";
                break;
            case RowErrorKind::EmptyRequired: cells[*pos(Field::LabResult)].clear(); break;
            case RowErrorKind::MissingColumn: cells.pop_back(); break;
            case RowErrorKind::EncodingError: cells[*pos(Field::RecordId)] += "\xC3\x28"; break;
        }
    }

private:
    const GeneratorSpec& spec_;
    const SchemaConfig& schema_;
    std::vector<Field> fields_;
    std::vector<std::string> pending_;
};

// Exact fault placement: k distinct row indices (Floyd sampling), kinds
// shuffled over them.
std::map<std::uint64_t, RowErrorKind> place_faults(const GeneratorSpec& spec) {
    std::map<std::uint64_t, RowErrorKind> out;
    auto k = spec.total_faults();
    if (k == 0) return out;
    Rng rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);
    std::set<std::uint64_t> rows;
    for (auto j = spec.rows - k; j < spec.rows; ++j) {
        auto t = rng.below(j + 1);
        if (!rows.insert(t).second) rows.insert(j);
    }
    std::vector<RowErrorKind> kinds;
    for (std::size_t i = 0; i < kRowErrorKindCount; ++i)
        kinds.insert(kinds.end(), spec.faults[i], static_cast<RowErrorKind>(i));
    for (std::size_t i = kinds.size(); i > 1; --i) std::swap(kinds[i - 1], kinds[rng.below(i)]);
    std::size_t i = 0;
    for (auto r : rows) out.emplace(r, kinds[i++]);
    return out;
}

}  // namespace

void generate_records(const GeneratorSpec& spec, const SchemaConfig& schema, std::ostream& out) {
    auto strata = solve_strata(spec);
    auto faults = place_faults(spec);
    RowMaker maker(spec, schema);
    if (maker.fields().empty()) throw InconsistentSpec("schema maps no columns");
    for (auto f : {Field::LabResult, Field::DeathDate, Field::ReportingState, Field::RecordId})
        if (!schema.present(f) && spec.faults[static_cast<std::size_t>(
                                      f == Field::LabResult     ? RowErrorKind::EmptyRequired
                                      : f == Field::DeathDate   ? RowErrorKind::MalformedDate
                                      : f == Field::RecordId    ? RowErrorKind::EncodingError
                                                                : RowErrorKind::MalformedInteger)] &&
            (f != Field::ReportingState || !schema.present(Field::Age)))
            throw InconsistentSpec("schema lacks the column needed to inject " + std::string(field_name(f)) + " faults");

    if (spec.faults[static_cast<std::size_t>(RowErrorKind::EncodingError)]) out << "\xEF\xBB\xBF";
    std::string line;
    for (std::size_t i = 0; i < maker.fields().size(); ++i) {
        if (i) line += ',';
        append_csv(line, *schema.column(maker.fields()[i]));
    }
    line += '\n';
    out << line;

    Rng rng(spec.seed);
    std::vector<std::uint64_t> remaining;
    for (const auto& s : strata) remaining.push_back(s.count);
    for (std::uint64_t r = 0; r < spec.rows; ++r) {
        auto k = remaining.size() == 1 ? 0 : rng.weighted(remaining);
        --remaining[k];
        auto cells = maker.make(rng, strata[k], r);
        if (auto it = faults.find(r); it != faults.end()) maker.corrupt(cells, it->second);
        line.clear();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            append_csv(line, cells[i]);
        }
        line += '\n';
        out << line;
    }
}

std::string generate_records(const GeneratorSpec& spec, const SchemaConfig& schema) {
    std::ostringstream out;
    generate_records(spec, schema, out);
    return out.str();
}

// ---------------------------------------------------------------------------
// Reference cohort

GeneratorSpec reference_cohort_spec(std::uint64_t seed, std::uint64_t distractor_rows) {
    using D = PlantDim;
    const int yes = ord(TriState::Yes);
    const int F = ord(Sex::Female), M = ord(Sex::Male);
    const int amb = ord(CareType::Ambulatory), hosp = ord(CareType::Hospitalized);
    const int pos = ord(TestStatus::Positive), neg = ord(TestStatus::Negative), pend = ord(TestStatus::Pending);
    const int dead = ord(VitalStatus::Deceased), alive = ord(VitalStatus::NotRecordedDeceased);

    std::vector<Stratum> strata;
    auto add = [&](std::uint64_t n, std::initializer_list<std::pair<D, int>> values) {
        Stratum s;
        s.count = n;
        s.set(D::IndigenousSpeaker, yes);
        for (auto [d, v] : values) s.set(d, v);
        strata.push_back(s);
    };
    add(170, {{D::TestStatus, pend}, {D::Sex, F}, {D::CareStatus, amb}});
    add(116, {{D::TestStatus, pend}, {D::Sex, F}, {D::CareStatus, hosp}});
    add(260, {{D::TestStatus, pend}, {D::Sex, M}, {D::CareStatus, amb}});
    add(57, {{D::TestStatus, pend}, {D::Sex, M}, {D::CareStatus, hosp}});
    add(1450, {{D::TestStatus, neg}, {D::Sex, F}, {D::CareStatus, amb}});
    add(487, {{D::TestStatus, neg}, {D::Sex, F}, {D::CareStatus, hosp}});
    add(1304, {{D::TestStatus, neg}, {D::Sex, M}, {D::CareStatus, amb}});
    add(539, {{D::TestStatus, neg}, {D::Sex, M}, {D::CareStatus, hosp}});

    const int in_icu = ord(IcuStatus::InICU), no_icu = ord(IcuStatus::NotInICU);
    const int intub = ord(IntubationStatus::Intubated), not_intub = ord(IntubationStatus::NotIntubated);
    add(1195, {{D::TestStatus, pos}, {D::Sex, F}, {D::CareStatus, amb}, {D::VitalStatus, alive}});
    add(1530, {{D::TestStatus, pos}, {D::Sex, M}, {D::CareStatus, amb}, {D::VitalStatus, alive}});
    add(600, {{D::TestStatus, pos}, {D::Sex, F}, {D::CareStatus, hosp}, {D::IcuStatus, no_icu}, {D::VitalStatus, alive}});
    add(1066, {{D::TestStatus, pos}, {D::Sex, M}, {D::CareStatus, hosp}, {D::IcuStatus, no_icu}, {D::VitalStatus, alive}});
    add(20, {{D::TestStatus, pos}, {D::Sex, F}, {D::CareStatus, hosp}, {D::IcuStatus, in_icu},
             {D::IntubationStatus, not_intub}, {D::VitalStatus, alive}});
    add(60, {{D::TestStatus, pos}, {D::Sex, M}, {D::CareStatus, hosp}, {D::IcuStatus, in_icu},
             {D::IntubationStatus, not_intub}, {D::VitalStatus, alive}});
    add(12, {{D::TestStatus, pos}, {D::Sex, F}, {D::CareStatus, hosp}, {D::IcuStatus, in_icu},
             {D::IntubationStatus, intub}, {D::VitalStatus, alive}});
    add(5, {{D::TestStatus, pos}, {D::Sex, M}, {D::CareStatus, hosp}, {D::IcuStatus, in_icu},
            {D::IntubationStatus, intub}, {D::VitalStatus, alive}});
    add(18, {{D::TestStatus, pos}, {D::Sex, F}, {D::CareStatus, hosp}, {D::IcuStatus, in_icu},
             {D::IntubationStatus, intub}, {D::VitalStatus, dead}});
    add(49, {{D::TestStatus, pos}, {D::Sex, M}, {D::CareStatus, hosp}, {D::IcuStatus, in_icu},
             {D::IntubationStatus, intub}, {D::VitalStatus, dead}});

    std::vector<std::pair<int, std::uint64_t>> deaths, survivors;
    for (int st = 1; st <= kStateCount; ++st) {
        const auto& c = kIndigenousByState[static_cast<std::size_t>(st - 1)];
        deaths.emplace_back(st, static_cast<std::uint64_t>(c.deaths));
        survivors.emplace_back(st, static_cast<std::uint64_t>(c.positives - c.deaths));
    }
    auto positive_with = [&](int vital) {
        return [=](const Stratum& s) { return s.get(D::TestStatus) == pos && s.get(D::VitalStatus) == vital; };
    };
    split_northwest(strata, positive_with(dead), D::State, deaths);
    split_northwest(strata, positive_with(alive), D::State, survivors);

    std::uint64_t unspecified = std::min<std::uint64_t>(62, distractor_rows);
    Stratum no;
    no.set(D::IndigenousSpeaker, ord(TriState::No));
    no.count = distractor_rows - unspecified;
    Stratum unk;
    unk.set(D::IndigenousSpeaker, ord(TriState::Unspecified));
    unk.count = unspecified;
    strata.push_back(no);
    strata.push_back(unk);

    GeneratorSpec spec;
    spec.seed = seed;
    spec.strata = std::move(strata);
    for (const auto& s : spec.strata) spec.rows += s.count;
    return spec;
}

}  // namespace epicohort
