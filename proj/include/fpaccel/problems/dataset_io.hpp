#pragma once

#include <iosfwd>
#include <string>

#include "fpaccel/problems/interval_censor.hpp"
#include "fpaccel/problems/mvt.hpp"
#include "fpaccel/problems/probit.hpp"

namespace fpaccel::dataio {

// Self-describing text format so external scripts can cross-check likelihood
// values: a header of "key value" lines (format marker, generator name,
// problem kind, seed, dimensions) followed by named column sections:
//
//   fpaccel-dataset v1
//   generator philox4x32-10/v1
//   problem probit
//   seed 42
//   n 500
//   p 10
//   begin X
//   <n rows of p space-separated values>
//   end
//   ...
//
// Values are written with 17 significant digits and reload bit-exactly;
// infinities appear as "inf".

void dump(std::ostream& os, const probit::Data& d);
void dump(std::ostream& os, const mvt::Data& d);
void dump(std::ostream& os, const icens::Data& d);

probit::Data load_probit(std::istream& is);
mvt::Data load_mvt(std::istream& is);
icens::Data load_icens(std::istream& is);

// problem kind named in a dump header ("probit", "mvt", "icens")
std::string peek_kind(std::istream& is);

}  // namespace fpaccel::dataio
