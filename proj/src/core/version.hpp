#pragma once

#define ONEBIT_VERSION_STRING "0.1.0"
