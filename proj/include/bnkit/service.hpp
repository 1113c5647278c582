#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "bnkit/inference.hpp"
#include "bnkit/io.hpp"

namespace bnkit {

struct ServiceResponse {
  int status = 200;
  Json body;
};

/// Session-scoped evidence and posterior queries over one immutable model.
/// Every call recomputes from the stored evidence. Thread-safe: sessions are
/// guarded individually, the model is shared read-only.
class DiagnosisService {
 public:
  DiagnosisService(Network model, std::size_t decision);
  ~DiagnosisService();

  const Network& model() const { return jt_.network(); }
  std::size_t decision() const { return decision_; }

  ServiceResponse get_model() const;
  ServiceResponse create_session();
  /// `body` maps variable names to a state label, or null to clear.
  ServiceResponse put_evidence(const std::string& id, const std::string& body);
  /// Empty target means the decision node.
  ServiceResponse get_posterior(const std::string& id, const std::string& target);
  ServiceResponse get_diagnosis(const std::string& id);
  ServiceResponse delete_session(const std::string& id);

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id);
  Json evidence_json(const Assignment& evidence) const;

  JunctionTree jt_;
  std::size_t decision_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// Expected reduction of the decision node's entropy (nats) from observing
/// each unobserved variable, largest first.
struct InformationValue {
  std::size_t variable = 0;
  double value = 0.0;
};
std::vector<InformationValue> value_of_information(const JunctionTree& jt, const Assignment& evidence,
                                                   std::size_t decision);

/// HTTP/1.1 front end for a DiagnosisService.
class HttpServer {
 public:
  explicit HttpServer(DiagnosisService& service);
  ~HttpServer();

  /// Binds (port 0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bnkit
