#ifndef M_H
#define M_H
#include "types.h"
void m_init(void);
tS32 m_step(void);
static tS32 m_twice(tS32 x) { return x * 2; }
#endif
