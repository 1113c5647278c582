#include "bnkit/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "httplib.h"

namespace bnkit {

namespace {

ServiceResponse error(int status, std::string_view code, const std::string& detail) {
  return {status, Json{{"error", code}, {"detail", detail}}};
}

ServiceResponse error(const Error& e) {
  const int status = e.code() == ErrorCode::kParseError ? 400 : 422;
  return error(status, to_string(e.code()), e.detail());
}

ServiceResponse no_session(const std::string& id) { return error(404, "SessionNotFound", "no session '" + id + "'"); }

ServiceResponse zero_evidence() {
  return error(409, "ZeroEvidence", "the current findings contradict each other under the model (probability 0)");
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace

struct DiagnosisService::Session {
  std::mutex mutex;
  Assignment evidence;
  std::int64_t created = 0;
};

DiagnosisService::DiagnosisService(Network model, std::size_t decision) : jt_(model), decision_(decision) {
  if (decision >= jt_.network().size()) throw Error(ErrorCode::kUnknownVariable, "decision node is out of range");
}

DiagnosisService::~DiagnosisService() = default;

std::shared_ptr<DiagnosisService::Session> DiagnosisService::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

Json DiagnosisService::evidence_json(const Assignment& evidence) const {
  Json j = Json::object();
  const Dag& dag = model().dag();
  for (std::size_t v = 0; v < evidence.size(); ++v) {
    if (evidence[v] != kMissing) j[dag.variable(v).name] = dag.variable(v).states[static_cast<std::size_t>(evidence[v])];
  }
  return j;
}

ServiceResponse DiagnosisService::get_model() const {
  Json j = to_json(model().dag());
  j["decision"] = model().dag().variable(decision_).name;
  return {200, j};
}

ServiceResponse DiagnosisService::create_session() {
  auto s = std::make_shared<Session>();
  s->evidence.assign(model().size(), kMissing);
  s->created = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = "s" + std::to_string(next_id_++);
    sessions_[id] = s;
  }
  return {201, Json{{"id", id}, {"created", s->created}}};
}

ServiceResponse DiagnosisService::put_evidence(const std::string& id, const std::string& body) {
  auto s = find(id);
  if (!s) return no_session(id);
  try {
    const Json j = parse_json(body);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "evidence body must be an object");
    const Dag& dag = model().dag();
    std::vector<std::pair<std::size_t, State>> updates;
    for (const auto& [name, value] : j.items()) {
      const std::size_t v = dag.index_of(name);
      if (value.is_null()) {
        updates.emplace_back(v, kMissing);
        continue;
      }
      if (!value.is_string()) {
        throw Error(ErrorCode::kUnknownState, "state of '" + name + "' must be a label or null");
      }
      const auto k = dag.variable(v).state_index(value.get<std::string>());
      if (!k) {
        throw Error(ErrorCode::kUnknownState, "'" + value.get<std::string>() + "' is not a state of '" + name + "'");
      }
      updates.emplace_back(v, *k);
    }
    std::lock_guard lock(s->mutex);
    for (const auto& [v, k] : updates) s->evidence[v] = k;
    return {200, Json{{"id", id}, {"evidence", evidence_json(s->evidence)}}};
  } catch (const Error& e) {
    return error(e);
  }
}

ServiceResponse DiagnosisService::get_posterior(const std::string& id, const std::string& target) {
  auto s = find(id);
  if (!s) return no_session(id);
  Assignment evidence;
  {
    std::lock_guard lock(s->mutex);
    evidence = s->evidence;
  }
  try {
    const Dag& dag = model().dag();
    const std::size_t t = target.empty() ? decision_ : dag.index_of(target);
    const Posterior p = jt_.query(evidence, t);
    if (p.zero_evidence) return zero_evidence();
    return {200, Json{{"variable", dag.variable(t).name},
                      {"states", dag.variable(t).states},
                      {"distribution", p.distribution},
                      {"evidence", evidence_json(evidence)}}};
  } catch (const Error& e) {
    return error(e);
  }
}

ServiceResponse DiagnosisService::get_diagnosis(const std::string& id) {
  auto s = find(id);
  if (!s) return no_session(id);
  Assignment evidence;
  {
    std::lock_guard lock(s->mutex);
    evidence = s->evidence;
  }
  const Dag& dag = model().dag();
  if (evidence[decision_] != kMissing) {
    return error(422, "TargetInEvidence", "'" + dag.variable(decision_).name + "' is part of the evidence");
  }
  const Classification c = classify(jt_, evidence, decision_);
  if (c.posterior.zero_evidence) return zero_evidence();
  Json voi = Json::array();
  for (const auto& v : value_of_information(jt_, evidence, decision_)) {
    voi.push_back(Json{{"variable", dag.variable(v.variable).name}, {"expected_entropy_reduction", v.value}});
  }
  const auto& states = dag.variable(decision_).states;
  return {200, Json{{"decision", dag.variable(decision_).name},
                    {"predicted", states[static_cast<std::size_t>(c.predicted)]},
                    {"states", states},
                    {"distribution", c.posterior.distribution},
                    {"entropy", entropy(c.posterior.distribution)},
                    {"value_of_information", voi},
                    {"evidence", evidence_json(evidence)}}};
}

ServiceResponse DiagnosisService::delete_session(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (sessions_.erase(id) == 0) return no_session(id);
  return {200, Json{{"deleted", id}}};
}

std::vector<InformationValue> value_of_information(const JunctionTree& jt, const Assignment& evidence,
                                                   std::size_t decision) {
  const Calibration base = jt.calibrate(evidence);
  if (base.zero_evidence()) return {};
  const std::size_t d[] = {decision};
  std::vector<double> prior = base.marginal(d).values();
  const double h0 = entropy(prior);

  std::vector<InformationValue> out;
  Assignment e = evidence;
  for (std::size_t v = 0; v < e.size(); ++v) {
    if (v == decision || e[v] != kMissing) continue;
    const std::size_t single[] = {v};
    const std::vector<double> pv = base.marginal(single).values();
    double expected = 0.0;
    for (std::size_t k = 0; k < pv.size(); ++k) {
      if (pv[k] <= 0.0) continue;
      e[v] = static_cast<State>(k);
      const Calibration cal = jt.calibrate(e);
      if (!cal.zero_evidence()) expected += pv[k] * entropy(cal.marginal(d).values());
    }
    e[v] = kMissing;
    out.push_back({v, std::max(0.0, h0 - expected)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const InformationValue& a, const InformationValue& b) { return a.value > b.value; });
  return out;
}

struct HttpServer::Impl {
  DiagnosisService& service;
  httplib::Server server;

  explicit Impl(DiagnosisService& s) : service(s) {
    auto reply = [](httplib::Response& res, const ServiceResponse& r) {
      res.status = r.status;
      res.set_content(dump_json(r.body), "application/json");
    };
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/model", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, service.get_model());
    });
    server.Post("/session", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, service.create_session());
    });
    server.Put(R"(/session/([^/]+)/evidence)", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.put_evidence(req.matches[1], req.body));
    });
    server.Get(R"(/session/([^/]+)/posterior)", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.get_posterior(req.matches[1], req.get_param_value("target")));
    });
    server.Get(R"(/session/([^/]+)/diagnosis)", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.get_diagnosis(req.matches[1]));
    });
    server.Delete(R"(/session/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.delete_session(req.matches[1]));
    });
    server.set_error_handler([reply](const httplib::Request& req, httplib::Response& res) {
      if (res.status == 404 && res.body.empty()) {
        reply(res, error(404, "NotFound", "no route for " + req.method + " " + req.path));
      }
    });
  }
};

HttpServer::HttpServer(DiagnosisService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace bnkit
