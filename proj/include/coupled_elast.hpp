#pragma once

#include "coupled_elast/core.hpp"
#include "coupled_elast/mesh.hpp"
#include "coupled_elast/partition.hpp"
#include "coupled_elast/quadrature.hpp"
#include "coupled_elast/simplex_basis.hpp"
#include "coupled_elast/fe_spaces.hpp"
#include "coupled_elast/material.hpp"
#include "coupled_elast/method.hpp"
#include "coupled_elast/problems.hpp"
#include "coupled_elast/assembly.hpp"
#include "coupled_elast/solver.hpp"
#include "coupled_elast/postprocess.hpp"
#include "coupled_elast/vtk.hpp"
#include "coupled_elast/driver.hpp"
