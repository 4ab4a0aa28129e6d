#pragma once

#include "aclsim/config.hpp"
#include "aclsim/errors.hpp"
#include "aclsim/fem/assembly.hpp"
#include "aclsim/fem/quadrature.hpp"
#include "aclsim/fem/space.hpp"
#include "aclsim/integrator.hpp"
#include "aclsim/io.hpp"
#include "aclsim/model.hpp"
#include "aclsim/pxi.hpp"
#include "aclsim/spectral.hpp"
#include "aclsim/study.hpp"
#include "aclsim/types.hpp"
#include "aclsim/verify.hpp"

namespace aclsim {
inline constexpr const char* version = "0.1.0";
}
