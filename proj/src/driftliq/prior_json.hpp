#ifndef DRIFTLIQ_PRIOR_JSON_HPP
#define DRIFTLIQ_PRIOR_JSON_HPP

#include <string>

#include "driftliq/prior.hpp"

namespace driftliq {

// Schema:
//   {"kind":"two_point","l":-1.0,"h":1.0,"pi":0.5}
//   {"kind":"normal","m":-0.1,"gamma":0.5}
//   {"kind":"discrete","points":[...],"weights":[...]}
//   {"kind":"quadrature","nodes":[...],"weights":[...]}
Prior prior_from_json(const std::string& text);
std::string prior_to_json(const Prior& prior);

}  // namespace driftliq

#endif
