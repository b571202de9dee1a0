// SPDX-License-Identifier: Apache-2.0
//
// dsmdt: channel estimation for RIS-aided multi-user MIMO-OFDM links
// Copyright (C) 2026 The dsmdt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "dsmdt/serialize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace dsmdt {

using nlohmann::json;

namespace {

json real(double v)
{
    if (std::isfinite(v))
        return v;
    if (std::isnan(v))
        return nullptr;
    return v > 0 ? "inf" : "-inf";
}

double real_from(const json &j)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf")
            return std::numeric_limits<double>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
        throw std::invalid_argument("unexpected string '" + s + "' where a number was expected");
    }
    if (j.is_null())
        return std::nan("");
    return j.get<double>();
}

json complex(const cdouble &z) { return json::array({real(z.real()), real(z.imag())}); }

json vec(const RVector &v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(real(v[i]));
    return a;
}

json vec(const CVector &v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(complex(v[i]));
    return a;
}

json mat(const RMatrix &m)
{
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(real(m(r, c)));
        a.push_back(std::move(row));
    }
    return a;
}

json mat(const CMatrix &m)
{
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(complex(m(r, c)));
        a.push_back(std::move(row));
    }
    return a;
}

RVector rvec_from(const json &j)
{
    RVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = real_from(j.at(i));
    return v;
}

CVector cvec_from(const json &j)
{
    CVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto &z = j.at(i);
        if (!z.is_array() || z.size() != 2)
            throw std::invalid_argument("complex values must be [re, im] pairs");
        v[static_cast<Eigen::Index>(i)] = {real_from(z.at(0)), real_from(z.at(1))};
    }
    return v;
}

json link(const LinkPaths &l)
{
    json j{{"gains", vec(l.gains)}, {"tau", vec(l.tau)}, {"omega", vec(l.omega)}, {"psi", vec(l.psi)}};
    if (l.phi.size() > 0)
        j["phi"] = vec(l.phi);
    return j;
}

LinkPaths link_from(const json &j)
{
    LinkPaths l;
    l.gains = cvec_from(j.at("gains"));
    l.tau = rvec_from(j.at("tau"));
    l.omega = rvec_from(j.at("omega"));
    l.psi = rvec_from(j.at("psi"));
    if (j.contains("phi"))
        l.phi = rvec_from(j.at("phi"));
    return l;
}

} // namespace

std::string to_json(const ScenarioConfig &c, int indent)
{
    const json j{{"M", c.M},
                 {"N1", c.N1},
                 {"N2", c.N2},
                 {"K", c.K},
                 {"P", c.P},
                 {"Q", c.Q},
                 {"L1", c.L1},
                 {"L2", c.L2},
                 {"carrier_freq", real(c.carrier_freq)},
                 {"dist_bs", real(c.dist_bs)},
                 {"dist_ue_min", real(c.dist_ue_min)},
                 {"dist_ue_max", real(c.dist_ue_max)},
                 {"snr_db", real(c.snr_db)},
                 {"l2_init", c.l2_init},
                 {"min_separation", real(c.min_separation)}};
    return j.dump(indent);
}

ScenarioConfig scenario_config_from_json(const std::string &text)
{
    try {
        const json j = json::parse(text);
        ScenarioConfig c;
        c.M = j.at("M").get<std::size_t>();
        c.N1 = j.at("N1").get<std::size_t>();
        c.N2 = j.at("N2").get<std::size_t>();
        c.K = j.at("K").get<std::size_t>();
        c.P = j.at("P").get<std::size_t>();
        c.Q = j.at("Q").get<std::size_t>();
        c.L1 = j.at("L1").get<std::size_t>();
        c.L2 = j.at("L2").get<std::vector<std::size_t>>();
        c.carrier_freq = real_from(j.at("carrier_freq"));
        c.dist_bs = real_from(j.at("dist_bs"));
        c.dist_ue_min = real_from(j.at("dist_ue_min"));
        c.dist_ue_max = real_from(j.at("dist_ue_max"));
        c.snr_db = real_from(j.at("snr_db"));
        c.l2_init = j.at("l2_init").get<std::size_t>();
        c.min_separation = real_from(j.at("min_separation"));
        return c;
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("scenario config JSON: ") + e.what());
    }
}

std::string to_json(const ChannelScenario &s, int indent)
{
    json users = json::array();
    for (const auto &l : s.ue_ris)
        users.push_back(link(l));
    const json j{{"ris_bs", link(s.ris_bs)},
                 {"ue_ris", users},
                 {"ue_distance", s.ue_distance},
                 {"bs_distance", real(s.bs_distance)}};
    return j.dump(indent);
}

ChannelScenario channel_scenario_from_json(const std::string &text)
{
    try {
        const json j = json::parse(text);
        ChannelScenario s;
        s.ris_bs = link_from(j.at("ris_bs"));
        validate_link(s.ris_bs, true);
        for (const auto &u : j.at("ue_ris")) {
            s.ue_ris.push_back(link_from(u));
            validate_link(s.ue_ris.back(), false);
        }
        s.ue_distance = j.at("ue_distance").get<std::vector<double>>();
        s.bs_distance = real_from(j.at("bs_distance"));
        return s;
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("channel scenario JSON: ") + e.what());
    }
}

std::string to_json(const EstimateReport &r, bool include_timings, int indent)
{
    json ues = json::array();
    for (const auto &u : r.ues) {
        ues.push_back({{"tau", mat(u.tau)},
                       {"omega", mat(u.omega)},
                       {"psi", mat(u.psi)},
                       {"beta", mat(u.beta)},
                       {"l2_hat", u.l2_hat},
                       {"reliable", u.reliable},
                       {"tau_inconsistency", real(u.tau_inconsistency)},
                       {"gain_inconsistency", real(u.gain_inconsistency)},
                       {"gain_ridge", u.gain_ridge},
                       {"columns_dropped", u.columns_dropped},
                       {"residual", real(u.residual)},
                       {"aoa_scores", u.aoa_scores}});
    }
    json j{{"ok", r.ok},
           {"failure", r.failure},
           {"reference", r.reference},
           {"reference_forced", r.reference_forced},
           {"phi_hat", vec(r.phi_hat)},
           {"l1_hat", r.l1_hat},
           {"aod_eigenvalues", vec(r.aod_eigenvalues)},
           {"anchor_row", r.anchor_row},
           {"tau_offsets", vec(r.tau_offsets)},
           {"omega_offsets", vec(r.omega_offsets)},
           {"psi_offsets", vec(r.psi_offsets)},
           {"delay_outliers", r.delay_outliers},
           {"ues", ues},
           {"valid", r.valid},
           {"primary_valid", r.primary_valid},
           {"fallback_used", r.fallback_used},
           {"reliable_users", r.reliable_users},
           {"warnings", r.warnings}};
    if (include_timings)
        j["times"] = {{"aod", r.times.aod},
                      {"delay", r.times.delay},
                      {"aoa", r.times.aoa},
                      {"gain", r.times.gain},
                      {"total", r.times.total}};
    return j.dump(indent);
}

} // namespace dsmdt
