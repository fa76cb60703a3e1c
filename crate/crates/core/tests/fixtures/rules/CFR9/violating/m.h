#ifndef M_H
#define M_H
#include "types.h"
void m_init(void);
tS32 m_step(void);
tS32 m_peek(void);
#endif
