#include "safedp/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

namespace safedp {

using json = nlohmann::json;

namespace {

std::string fmt_num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::ios_base::failure("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool is_unit_row(const Matrix& probs, Eigen::Index i) {
    int ones = 0;
    for (Eigen::Index u = 0; u < probs.cols(); ++u) {
        const double x = probs(i, u);
        if (std::abs(x - 1.0) <= prob_tol)
            ++ones;
        else if (std::abs(x) > prob_tol)
            return false;
    }
    return ones == 1;
}

const json& require(const json& doc, const char* key, const std::string& path) {
    auto it = doc.find(key);
    if (it == doc.end())
        throw ParseError(path + ": missing key \"" + key + "\"");
    return *it;
}

std::vector<std::string> string_list(const json& node, const std::string& path) {
    if (!node.is_array())
        throw ParseError(path + ": expected an array of labels");
    std::vector<std::string> out;
    for (std::size_t k = 0; k < node.size(); ++k) {
        if (!node[k].is_string())
            throw ParseError(path + "[" + std::to_string(k) + "]: expected a string");
        out.push_back(node[k].get<std::string>());
    }
    return out;
}

double number(const json& node, const std::string& path) {
    if (!node.is_number())
        throw ParseError(path + ": expected a number");
    return node.get<double>();
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
}

} // namespace

double MdpModel::forbidden_exit(std::size_t i, std::size_t u) const {
    return transitions[u]
        .row(static_cast<Eigen::Index>(i))
        .segment(static_cast<Eigen::Index>(partition.forbidden_begin()),
                 static_cast<Eigen::Index>(partition.forbidden))
        .sum();
}

double MdpModel::target_exit(std::size_t i, std::size_t u) const {
    return transitions[u]
        .row(static_cast<Eigen::Index>(i))
        .segment(static_cast<Eigen::Index>(partition.target_begin()),
                 static_cast<Eigen::Index>(partition.target))
        .sum();
}

std::size_t MdpModel::state_index(const std::string& label) const {
    auto it = std::find(states.begin(), states.end(), label);
    if (it == states.end())
        throw ParseError("unknown state \"" + label + "\"");
    return static_cast<std::size_t>(it - states.begin());
}

std::size_t MdpModel::action_index(const std::string& label) const {
    auto it = std::find(actions.begin(), actions.end(), label);
    if (it == actions.end())
        throw ParseError("unknown action \"" + label + "\"");
    return static_cast<std::size_t>(it - actions.begin());
}

Policy::Policy(Matrix probs) : probs_(std::move(probs)) {
    pure_ = probs_.rows() > 0;
    for (Eigen::Index i = 0; i < probs_.rows() && pure_; ++i)
        pure_ = is_unit_row(probs_, i);
}

std::size_t Policy::action(std::size_t i) const {
    Eigen::Index best = 0;
    probs_.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    return static_cast<std::size_t>(best);
}

ValidationReport validate_model(const MdpModel& model) {
    ValidationReport report;
    const std::size_t n = model.n_states();
    const std::size_t m = model.n_actions();
    const auto& part = model.partition;

    if (part.size() != n)
        report.push_back({"partition", "partition covers " + std::to_string(part.size()) +
                                           " states but the model has " + std::to_string(n)});
    if (part.taboo == 0)
        report.push_back({"partition.taboo", "H empty"});
    if (part.target == 0)
        report.push_back({"partition.target", "E empty"});
    if (m == 0)
        report.push_back({"actions", "no actions"});

    std::set<std::string> seen;
    for (const auto& s : model.states)
        if (!seen.insert(s).second)
            report.push_back({"states", "duplicate state \"" + s + "\""});
    seen.clear();
    for (const auto& a : model.actions)
        if (!seen.insert(a).second)
            report.push_back({"actions", "duplicate action \"" + a + "\""});

    if (model.transitions.size() != m) {
        report.push_back({"transitions", "expected one matrix per action"});
        return report;
    }
    const auto label = [&](std::size_t i, std::size_t u) {
        return "(" + model.states[i] + "," + model.actions[u] + ")";
    };
    for (std::size_t u = 0; u < m; ++u) {
        const Matrix& t = model.transitions[u];
        if (static_cast<std::size_t>(t.rows()) != n || static_cast<std::size_t>(t.cols()) != n) {
            report.push_back({"transitions", "matrix for action " + model.actions[u] +
                                                 " has wrong shape"});
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            bool entries_ok = true;
            for (std::size_t j = 0; j < n; ++j) {
                const double x = t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
                    report.push_back({"transitions", "p" + label(i, u) + "->" + model.states[j] +
                                                         " = " + fmt_num(x) +
                                                         " outside [0,1]"});
                    entries_ok = false;
                }
            }
            const double sum = t.row(static_cast<Eigen::Index>(i)).sum();
            if (entries_ok && std::abs(sum - 1.0) > prob_tol)
                report.push_back({"transitions", "row " + label(i, u) + " sums to " + fmt_num(sum)});
        }
    }

    if (static_cast<std::size_t>(model.rewards.rows()) != m ||
        static_cast<std::size_t>(model.rewards.cols()) != n) {
        report.push_back({"rewards", "reward table has wrong shape"});
        return report;
    }
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t i = 0; i < n; ++i) {
            const double r = model.rho(u, i);
            if (!std::isfinite(r))
                report.push_back({"rewards", "reward" + label(i, u) + " is not finite"});
            else if (part.in_target(i) && r != 0.0)
                report.push_back({"rewards", "reward nonzero on target " + label(i, u)});
        }
    return report;
}

ValidationReport validate_policy(const MdpModel& model, const Policy& policy) {
    ValidationReport report;
    if (policy.n_states() != model.n_states() || policy.n_actions() != model.n_actions()) {
        report.push_back({"policy", "policy shape does not match the model"});
        return report;
    }
    for (std::size_t i = 0; i < policy.n_states(); ++i) {
        const auto row = policy.probs().row(static_cast<Eigen::Index>(i));
        if ((row.array() < 0.0).any() || !row.allFinite())
            report.push_back({"policy", "row " + model.states[i] + " has a negative entry"});
        else if (std::abs(row.sum() - 1.0) > prob_tol)
            report.push_back({"policy", "row " + model.states[i] + " sums to " + fmt_num(row.sum())});
    }
    return report;
}

MdpModel parse_model(const std::string& text) {
    const json doc = parse_json(text);
    if (!doc.is_object())
        throw ParseError("malformed document: top level must be an object");

    const auto all_states = string_list(require(doc, "states", "$"), "states");
    const auto actions = string_list(require(doc, "actions", "$"), "actions");
    const json& part = require(doc, "partition", "$");
    if (!part.is_object())
        throw ParseError("partition: expected an object");
    const auto list_or_empty = [&](const char* key) {
        auto it = part.find(key);
        return it == part.end() ? std::vector<std::string>{}
                                : string_list(*it, std::string("partition.") + key);
    };
    const auto taboo = list_or_empty("taboo");
    const auto forbidden = list_or_empty("forbidden");
    const auto target = list_or_empty("target");

    // Canonical ordering: H, then U, then E.
    std::vector<std::string> ordered;
    ordered.insert(ordered.end(), taboo.begin(), taboo.end());
    ordered.insert(ordered.end(), forbidden.begin(), forbidden.end());
    ordered.insert(ordered.end(), target.begin(), target.end());

    std::set<std::string> declared(all_states.begin(), all_states.end());
    std::set<std::string> placed;
    std::ostringstream problems;
    for (const auto& s : ordered) {
        if (!declared.count(s))
            throw ParseError("partition: unknown state \"" + s + "\"");
        if (!placed.insert(s).second)
            problems << "state \"" << s << "\" appears in more than one partition block; ";
    }
    for (const auto& s : all_states)
        if (!placed.count(s))
            problems << "state \"" << s << "\" is in no partition block; ";

    MdpModel model;
    model.states = ordered;
    model.actions = actions;
    model.partition = {taboo.size(), forbidden.size(), target.size()};
    if (!problems.str().empty()) {
        if (taboo.empty())
            problems << "H empty; ";
        if (target.empty())
            problems << "E empty; ";
        throw ValidationError(problems.str());
    }

    const std::size_t n = ordered.size();
    const std::size_t m = actions.size();
    std::unordered_map<std::string, std::size_t> sidx, aidx;
    for (std::size_t i = 0; i < n; ++i)
        sidx[ordered[i]] = i;
    for (std::size_t u = 0; u < m; ++u)
        aidx[actions[u]] = u;
    const auto lookup = [](const auto& table, const json& node, const std::string& path,
                           const char* kind) {
        if (!node.is_string())
            throw ParseError(path + ": expected a " + kind + " label");
        auto it = table.find(node.template get<std::string>());
        if (it == table.end())
            throw ParseError(path + ": unknown " + kind + " \"" +
                             node.template get<std::string>() + "\"");
        return it->second;
    };

    model.transitions.assign(m, Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
    std::vector<std::vector<bool>> row_given(n, std::vector<bool>(m, false));
    if (auto it = doc.find("transitions"); it != doc.end()) {
        if (!it->is_array())
            throw ParseError("transitions: expected an array");
        std::set<std::tuple<std::size_t, std::size_t, std::size_t>> triples;
        for (std::size_t k = 0; k < it->size(); ++k) {
            const std::string path = "transitions[" + std::to_string(k) + "]";
            const json& t = (*it)[k];
            const auto i = lookup(sidx, require(t, "from", path), path + ".from", "state");
            const auto u = lookup(aidx, require(t, "action", path), path + ".action", "action");
            const auto j = lookup(sidx, require(t, "to", path), path + ".to", "state");
            const double x = number(require(t, "p", path), path + ".p");
            if (!triples.insert({i, u, j}).second)
                throw ParseError(path + ": duplicate transition");
            model.transitions[u](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
            row_given[i][u] = true;
        }
    }
    // Absorbing states whose rows are omitted become self-loops.
    for (std::size_t i = model.partition.taboo; i < n; ++i)
        for (std::size_t u = 0; u < m; ++u)
            if (!row_given[i][u])
                model.transitions[u](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;

    model.rewards = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    if (auto it = doc.find("rewards"); it != doc.end()) {
        if (!it->is_array())
            throw ParseError("rewards: expected an array");
        std::set<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t k = 0; k < it->size(); ++k) {
            const std::string path = "rewards[" + std::to_string(k) + "]";
            const json& r = (*it)[k];
            const auto i = lookup(sidx, require(r, "state", path), path + ".state", "state");
            const auto u = lookup(aidx, require(r, "action", path), path + ".action", "action");
            if (!pairs.insert({u, i}).second)
                throw ParseError(path + ": duplicate reward");
            model.rewards(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) =
                number(require(r, "rho", path), path + ".rho");
        }
    }

    return model;
}

MdpModel load_model(const std::string& text) {
    MdpModel model = parse_model(text);
    const auto report = validate_model(model);
    if (!report.empty()) {
        std::ostringstream msg;
        for (const auto& v : report)
            msg << v.path << ": " << v.message << "; ";
        throw ValidationError(msg.str());
    }
    return model;
}

std::string read_text_file(const std::string& path) { return read_file(path); }

MdpModel load_model_file(const std::string& path) { return load_model(read_file(path)); }

std::string serialize_model(const MdpModel& model) {
    json doc;
    doc["states"] = model.states;
    doc["actions"] = model.actions;
    const auto& part = model.partition;
    const auto block = [&](std::size_t begin, std::size_t count) {
        return std::vector<std::string>(model.states.begin() + static_cast<long>(begin),
                                        model.states.begin() + static_cast<long>(begin + count));
    };
    doc["partition"] = {{"taboo", block(0, part.taboo)},
                        {"forbidden", block(part.forbidden_begin(), part.forbidden)},
                        {"target", block(part.target_begin(), part.target)}};
    json transitions = json::array();
    for (std::size_t i = 0; i < model.n_states(); ++i)
        for (std::size_t u = 0; u < model.n_actions(); ++u)
            for (std::size_t j = 0; j < model.n_states(); ++j)
                if (const double x = model.p(i, u, j); x != 0.0)
                    transitions.push_back({{"from", model.states[i]},
                                           {"action", model.actions[u]},
                                           {"to", model.states[j]},
                                           {"p", x}});
    doc["transitions"] = transitions;
    json rewards = json::array();
    for (std::size_t i = 0; i < model.n_states(); ++i)
        for (std::size_t u = 0; u < model.n_actions(); ++u)
            if (const double r = model.rho(u, i); r != 0.0)
                rewards.push_back({{"state", model.states[i]}, {"action", model.actions[u]}, {"rho", r}});
    doc["rewards"] = rewards;
    return doc.dump(2);
}

Policy load_policy(const MdpModel& model, const std::string& text) {
    const json doc = parse_json(text);
    if (!doc.is_object())
        throw ParseError("malformed document: top level must be an object");
    const json& rows = require(doc, "policy", "$");
    if (!rows.is_array())
        throw ParseError("policy: expected an array");

    const auto n = static_cast<Eigen::Index>(model.n_states());
    const auto m = static_cast<Eigen::Index>(model.n_actions());
    Matrix probs = Matrix::Zero(n, m);
    std::vector<bool> given(model.n_states(), false);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::string path = "policy[" + std::to_string(k) + "]";
        const json& row = rows[k];
        const json& state = require(row, "state", path);
        if (!state.is_string())
            throw ParseError(path + ".state: expected a state label");
        std::size_t i;
        try {
            i = model.state_index(state.get<std::string>());
        } catch (const ParseError& e) {
            throw ParseError(path + ".state: " + e.what());
        }
        if (given[i])
            throw ParseError(path + ": duplicate row for state \"" + model.states[i] + "\"");
        given[i] = true;
        const json& dist = require(row, "dist", path);
        if (!dist.is_object())
            throw ParseError(path + ".dist: expected an object");
        for (const auto& [label, value] : dist.items()) {
            std::size_t u;
            try {
                u = model.action_index(label);
            } catch (const ParseError& e) {
                throw ParseError(path + ".dist: " + e.what());
            }
            probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) =
                number(value, path + ".dist." + label);
        }
    }
    for (std::size_t i = 0; i < model.n_states(); ++i) {
        if (given[i])
            continue;
        if (model.partition.in_taboo(i))
            throw ParseError("policy missing state \"" + model.states[i] + "\"");
        probs(static_cast<Eigen::Index>(i), 0) = 1.0;
    }
    Policy policy(std::move(probs));
    const auto report = validate_policy(model, policy);
    if (!report.empty())
        throw ValidationError(report.front().message);
    return policy;
}

Policy load_policy_file(const MdpModel& model, const std::string& path) {
    return load_policy(model, read_file(path));
}

std::string serialize_policy(const MdpModel& model, const Policy& policy) {
    json rows = json::array();
    for (std::size_t i = 0; i < model.n_taboo(); ++i) {
        json dist = json::object();
        for (std::size_t u = 0; u < model.n_actions(); ++u)
            if (const double x = policy(i, u); x != 0.0)
                dist[model.actions[u]] = x;
        rows.push_back({{"state", model.states[i]}, {"dist", dist}});
    }
    return json{{"policy", rows}}.dump(2);
}

Policy pure_policy(const MdpModel& model, std::span<const std::size_t> taboo_actions) {
    if (taboo_actions.size() != model.n_taboo())
        throw DimensionMismatch("pure policy needs one action per taboo state");
    Matrix probs = Matrix::Zero(static_cast<Eigen::Index>(model.n_states()),
                                static_cast<Eigen::Index>(model.n_actions()));
    for (std::size_t i = 0; i < model.n_states(); ++i) {
        const std::size_t u = i < taboo_actions.size() ? taboo_actions[i] : 0;
        if (u >= model.n_actions())
            throw DimensionMismatch("action index out of range");
        probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) = 1.0;
    }
    return Policy(std::move(probs));
}

Policy pure_policy(const MdpModel& model, const std::map<std::string, std::string>& assignment) {
    std::vector<std::size_t> actions(model.n_taboo());
    for (std::size_t i = 0; i < model.n_taboo(); ++i) {
        auto it = assignment.find(model.states[i]);
        if (it == assignment.end())
            throw ParseError("assignment missing state \"" + model.states[i] + "\"");
        actions[i] = model.action_index(it->second);
    }
    return pure_policy(model, actions);
}

Policy mix(const Policy& a, const Policy& b, double t) {
    if (a.probs().rows() != b.probs().rows() || a.probs().cols() != b.probs().cols())
        throw DimensionMismatch("cannot mix policies of different shapes");
    return Policy(t * a.probs() + (1.0 - t) * b.probs());
}

Matrix induced_matrix(const MdpModel& model, const Policy& policy) {
    if (policy.n_states() != model.n_states() || policy.n_actions() != model.n_actions())
        throw DimensionMismatch("policy shape does not match the model");
    const auto n = static_cast<Eigen::Index>(model.n_states());
    Matrix P = Matrix::Zero(n, n);
    for (std::size_t u = 0; u < model.n_actions(); ++u)
        P.noalias() += policy.probs().col(static_cast<Eigen::Index>(u)).asDiagonal() * model.transitions[u];
    return P;
}

std::size_t pure_policy_count(const MdpModel& model) {
    std::size_t count = 1;
    const std::size_t m = model.n_actions();
    for (std::size_t i = 0; i < model.n_taboo(); ++i) {
        if (m != 0 && count > std::numeric_limits<std::size_t>::max() / m)
            return std::numeric_limits<std::size_t>::max();
        count *= m;
    }
    return count;
}

std::vector<std::size_t> decode_pure(const MdpModel& model, std::size_t code) {
    std::vector<std::size_t> actions(model.n_taboo());
    const std::size_t m = model.n_actions();
    // State 0 is the least significant digit.
    for (std::size_t i = 0; i < actions.size(); ++i) {
        actions[i] = code % m;
        code /= m;
    }
    return actions;
}

} // namespace safedp
