#ifndef BAUMBOTT_BAUMBOTT_HPP
#define BAUMBOTT_BAUMBOTT_HPP

#include "baumbott/errors.hpp"
#include "baumbott/field_io.hpp"
#include "baumbott/foliation.hpp"
#include "baumbott/holonomy.hpp"
#include "baumbott/moduli.hpp"
#include "baumbott/numkernel.hpp"
#include "baumbott/rng.hpp"

#endif  // BAUMBOTT_BAUMBOTT_HPP
